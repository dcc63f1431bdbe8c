//! Separation detection for binary responses.
//!
//! The detector solves
//!
//! ```text
//! max Σᵢ sᵢ xᵢᵀb   s.t.  0 ≤ sᵢ xᵢᵀb ≤ 1  ∀i,   b free,     sᵢ = 2yᵢ − 1
//! ```
//!
//! Any nonzero feasible `b` can be rescaled until its largest margin hits 1, so
//! the optimum is either 0 (overlap, finite MLE) or at least 1 (separation).
//! The LP is solved through its dual, which has only `p+1` equality rows:
//!
//! ```text
//! min 1ᵀu   s.t.  Aᵀu − Aᵀv = Aᵀ1,  u, v ≥ 0,     A = diag(s) X
//! ```
//!
//! and the primal witness `b` is read off the simplex multipliers.

use nalgebra::{DMatrix, DVector};

use super::simplex::{solve_standard_form, LpStatus};
use super::{fit_mle_design, loglik_unchecked, Dataset};
use crate::linalg;

/// Objective above this value certifies separation.
pub const SEPARATION_TOL: f64 = 1e-9;
const WITNESS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationDetector {
    LinearProgram,
    /// Fallback used when the LP did not terminate cleanly.
    NewtonDivergence,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SeparationReport {
    pub separated: bool,
    /// Direction `b` with `sᵢxᵢᵀb ≥ 0` for all `i`, strict for at least one.
    pub witness_direction: Option<Vec<f64>>,
    pub detector: SeparationDetector,
    pub lp_objective: Option<f64>,
}

pub fn detect_separation(data: &Dataset) -> SeparationReport {
    detect_separation_design(data.x(), data.y())
}

/// Separation check of response `y` against design `x`.
pub fn detect_separation_design(x: &DMatrix<f64>, y: &DVector<f64>) -> SeparationReport {
    let (n, q) = x.shape();
    let mut a = x.clone();
    for i in 0..n {
        if y[i] < 0.5 {
            let mut r = a.row_mut(i);
            r.neg_mut();
        }
    }
    let at = a.transpose();
    let mut cons = DMatrix::zeros(q, 2 * n);
    cons.columns_mut(0, n).copy_from(&at);
    cons.columns_mut(n, n).copy_from(&(-&at));
    let rhs = at.column_sum();
    let mut cost = DVector::zeros(2 * n);
    cost.rows_mut(0, n).fill(1.0);

    let max_iter = 50 * (q + 2 * n);
    let sol = solve_standard_form(&cons, &rhs, &cost, max_iter);
    if sol.status == LpStatus::Optimal {
        let b = sol.duals;
        let margins = &a * &b;
        let witness_ok = margins.iter().all(|&m| m >= -WITNESS_TOL) && margins.amax() > WITNESS_TOL;
        if sol.objective <= SEPARATION_TOL {
            return SeparationReport {
                separated: false,
                witness_direction: None,
                detector: SeparationDetector::LinearProgram,
                lp_objective: Some(sol.objective.max(0.0)),
            };
        }
        if witness_ok {
            return SeparationReport {
                separated: true,
                witness_direction: Some(b.iter().map(|v| v + 0.0).collect()),
                detector: SeparationDetector::LinearProgram,
                lp_objective: Some(sol.objective),
            };
        }
    }
    log::warn!("separation LP ended with {:?}; falling back to Newton divergence check", sol.status);
    newton_divergence(x, y)
}

fn newton_divergence(x: &DMatrix<f64>, y: &DVector<f64>) -> SeparationReport {
    // Under separation the score decays like e^{-|η|} while β runs off, so a
    // "converged" fit can still sit on saturated fitted probabilities.
    let separated = match fit_mle_design(x, y, None) {
        Ok(fit) => !fit.converged || fit.beta_hat.amax() > 1e4 || (x * &fit.beta_hat).amax() > 30.0,
        Err(_) => true,
    };
    SeparationReport {
        separated,
        witness_direction: None,
        detector: SeparationDetector::NewtonDivergence,
        lp_objective: None,
    }
}

/// Cheap certificate that a response is *not* separated by a fixed design.
///
/// If `b` separates, then at any `β` the directional derivative of the
/// log-likelihood along `b` is `Σ |yᵢ−θᵢ| |xᵢᵀb| ≥ m ‖Xb‖₂ ≥ m σ_min(X) ‖b‖₂`
/// with `m = minᵢ min(θᵢ, 1−θᵢ)`. So any `β` with `‖score(β)‖₂ < m σ_min(X)`
/// rules separation out. A few warm-started Newton steps usually reach such
/// a point; when they do not, callers fall back to the LP.
#[derive(Debug, Clone)]
pub struct OverlapCertifier {
    x: DMatrix<f64>,
    sigma_min: f64,
    warm: DVector<f64>,
}

const CERTIFY_STEPS: usize = 8;
/// Safety factor on the bound against round-off in the score.
const CERTIFY_MARGIN: f64 = 0.5;

impl OverlapCertifier {
    pub fn new(x: &DMatrix<f64>) -> Self {
        let gram = x.tr_mul(x);
        let lam = gram.symmetric_eigenvalues().min();
        OverlapCertifier { x: x.clone(), sigma_min: lam.max(0.0).sqrt(), warm: DVector::zeros(x.ncols()) }
    }

    /// `true` when `y` is certified non-separated; `false` means unknown.
    pub fn certify(&mut self, y: &DVector<f64>) -> bool {
        if !(self.sigma_min > 0.0) || y.len() != self.x.nrows() {
            return false;
        }
        let mut beta = self.warm.clone();
        let mut ll = loglik_unchecked(&self.x, y, &beta);
        for step in 0..=CERTIFY_STEPS {
            let eta = &self.x * &beta;
            let theta: Vec<f64> = eta.iter().map(|&e| super::logistic(e)).collect();
            let resid = DVector::from_fn(y.len(), |i, _| y[i] - theta[i]);
            let score = self.x.tr_mul(&resid);
            let m = eta.iter().map(|&e| super::logistic(-e.abs())).fold(f64::INFINITY, f64::min);
            if score.norm() < CERTIFY_MARGIN * m * self.sigma_min {
                self.warm = beta;
                return true;
            }
            if step == CERTIFY_STEPS {
                break;
            }
            let w: Vec<f64> = theta.iter().map(|&t| t * (1.0 - t)).collect();
            let info = linalg::weighted_gram(&self.x, &w);
            let Ok(chol) = linalg::cholesky(&info, "observed information") else {
                return false;
            };
            let dir = chol.solve(&score);
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..20 {
                let cand = &beta + &dir * t;
                let ll_c = loglik_unchecked(&self.x, y, &cand);
                if ll_c.is_finite() && ll_c >= ll - 1e-12 * (1.0 + ll.abs()) {
                    beta = cand;
                    ll = ll_c;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                return false;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_design(xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(xs.len(), 2, |i, j| if j == 0 { 1.0 } else { xs[i] })
    }

    #[test]
    fn threshold_separated() {
        let x = line_design(&[1.0, 2.0, 3.0, 4.0]);
        let y = DVector::from_vec(vec![0.0, 0.0, 1.0, 1.0]);
        let r = detect_separation_design(&x, &y);
        assert!(r.separated);
        assert_eq!(r.detector, SeparationDetector::LinearProgram);
        let b = DVector::from_vec(r.witness_direction.unwrap());
        for i in 0..4 {
            let s = 2.0 * y[i] - 1.0;
            assert!(s * x.row(i).dot(&b.transpose()) >= -1e-9);
        }
    }

    #[test]
    fn interleaved_overlap() {
        let x = line_design(&[1.0, 2.0, 3.0, 4.0]);
        let y = DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0]);
        let r = detect_separation_design(&x, &y);
        assert!(!r.separated);
        assert!(r.witness_direction.is_none());
    }

    #[test]
    fn quasi_separation_detected() {
        // tie at x=2 with both labels: quasi-complete separation
        let x = line_design(&[1.0, 2.0, 2.0, 3.0]);
        let y = DVector::from_vec(vec![0.0, 0.0, 1.0, 1.0]);
        assert!(detect_separation_design(&x, &y).separated);
    }

    #[test]
    fn all_same_label_is_separated() {
        let x = line_design(&[1.0, 2.0, 3.0]);
        let y = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        assert!(detect_separation_design(&x, &y).separated);
    }

    #[test]
    fn newton_fallback_agrees_on_clear_cases() {
        let x = line_design(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let sep = DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let ovl = DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert!(newton_divergence(&x, &sep).separated);
        assert!(!newton_divergence(&x, &ovl).separated);
    }

    #[test]
    fn certifier_agrees_with_lp() {
        use crate::pg::RngStream;
        use rand::Rng;
        let mut rng = RngStream::new(5, 0);
        let n = 40;
        let x = DMatrix::from_fn(n, 4, |_, j| if j == 0 { 1.0 } else { rng.random::<f64>() - 0.5 });
        let mut cert = OverlapCertifier::new(&x);
        let mut certified = 0;
        for _ in 0..300 {
            let y = DVector::from_fn(n, |_, _| if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 });
            if cert.certify(&y) {
                certified += 1;
                assert!(!detect_separation_design(&x, &y).separated);
            }
        }
        assert!(certified > 200, "{certified}");
        let sep = DVector::from_fn(n, |i, _| if x[(i, 1)] > 0.0 { 1.0 } else { 0.0 });
        assert!(!cert.certify(&sep));
    }
}
