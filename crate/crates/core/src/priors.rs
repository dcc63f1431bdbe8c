//! Prior ingredients of the LPEP model.
//!
//! * δ hyperpriors: fixed unit information (`δ = n*`), hyper-g/n and the
//!   model-size dependent robust prior.
//! * Beta-Binomial prior over models.
//! * The imaginary-sample predictive: Beta-Binomial(½, ½) on `Σ y*`, restricted
//!   to responses that are not separable under the full design. Its normaliser
//!   over the admissible set is never computed; every consumer works with
//!   ratios in which it cancels.
//! * LPEP density evaluation given one imaginary sample, conditional on δ or
//!   with δ integrated out numerically.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{arg_err, LpepError, Result};
use crate::glm::{detect_separation_design, fit_mle_design, Dataset, GlmFit, ModelIndicator};
use crate::linalg;
use crate::quadrature::log_trapezoid_logspaced;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaPriorKind {
    /// Point mass at `δ = n*`.
    FixedUnitInfo,
    /// `f(δ) ∝ (1 + δ/n*)⁻²` on `δ > 0`.
    HyperGOverN,
    /// `f(δ|γ) = (n*+1)^{1/2} / (2 (p_γ+1)^{1/2} (δ+1)^{3/2})` on `δ > (n*−p_γ)/(p_γ+1)`.
    Robust,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaPrior {
    pub kind: DeltaPriorKind,
    pub n_star: usize,
}

impl DeltaPrior {
    pub fn new(kind: DeltaPriorKind, n_star: usize) -> Result<Self> {
        if n_star == 0 {
            return arg_err("n* must be at least 1");
        }
        Ok(DeltaPrior { kind, n_star })
    }

    pub fn fixed(n_star: usize) -> Self {
        DeltaPrior { kind: DeltaPriorKind::FixedUnitInfo, n_star }
    }

    pub fn is_fixed(&self) -> bool {
        self.kind == DeltaPriorKind::FixedUnitInfo
    }

    fn ns(&self) -> f64 {
        self.n_star as f64
    }

    /// Left end of the support of `δ | γ`.
    pub fn support_lower(&self, model: &ModelIndicator) -> f64 {
        let pg = model.size() as f64;
        match self.kind {
            DeltaPriorKind::FixedUnitInfo => self.ns(),
            DeltaPriorKind::HyperGOverN => 0.0,
            DeltaPriorKind::Robust => (self.ns() - pg) / (pg + 1.0),
        }
    }

    /// Log prior density of δ; `-∞` outside the support.
    ///
    /// Hyper-g/n is returned unnormalised, `log (1+δ/n*)⁻²`, so that
    /// `log_prior(n*) = log ¼`; the proper density is this minus
    /// [`DeltaPrior::log_normalizer`]. The constant does not depend on the
    /// model, so it cancels in every posterior ratio.
    pub fn log_prior(&self, delta: f64, model: &ModelIndicator) -> f64 {
        if !(delta > 0.0) {
            return f64::NEG_INFINITY;
        }
        match self.kind {
            DeltaPriorKind::FixedUnitInfo => {
                if delta == self.ns() {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            DeltaPriorKind::HyperGOverN => -2.0 * (delta / self.ns()).ln_1p(),
            DeltaPriorKind::Robust => {
                if delta <= self.support_lower(model) {
                    return f64::NEG_INFINITY;
                }
                let pg1 = model.size() as f64 + 1.0;
                0.5 * (self.ns() + 1.0).ln() - 2f64.ln() - 0.5 * pg1.ln() - 1.5 * delta.ln_1p()
            }
        }
    }

    /// `log ∫ exp(log_prior)`: `log n*` for hyper-g/n, 0 otherwise.
    pub fn log_normalizer(&self) -> f64 {
        match self.kind {
            DeltaPriorKind::HyperGOverN => self.ns().ln(),
            _ => 0.0,
        }
    }

    /// Quantile function of the normalised prior of `δ | γ`.
    pub fn quantile(&self, u: f64, model: &ModelIndicator) -> f64 {
        match self.kind {
            DeltaPriorKind::FixedUnitInfo => self.ns(),
            // F(δ) = δ / (n* + δ)
            DeltaPriorKind::HyperGOverN => self.ns() * u / (1.0 - u),
            // F(δ) = 1 − ((a+1)/(δ+1))^{1/2}
            DeltaPriorKind::Robust => {
                let a = self.support_lower(model);
                (a + 1.0) / ((1.0 - u) * (1.0 - u)) - 1.0
            }
        }
    }
}

pub fn delta_log_prior(prior: &DeltaPrior, delta: f64, model: &ModelIndicator) -> f64 {
    prior.log_prior(delta, model)
}

pub fn delta_support_lower(prior: &DeltaPrior, model: &ModelIndicator) -> f64 {
    prior.support_lower(model)
}

/// Beta-Binomial(a, b) prior on model size, uniform within each size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPrior {
    pub a: f64,
    pub b: f64,
}

impl Default for ModelPrior {
    fn default() -> Self {
        ModelPrior { a: 1.0, b: 1.0 }
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

impl ModelPrior {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return arg_err("Beta-Binomial hyperparameters must be positive");
        }
        Ok(ModelPrior { a, b })
    }

    /// `log B(a+p_γ, b+p−p_γ) / B(a, b)`.
    pub fn log_prior(&self, model: &ModelIndicator) -> f64 {
        let p = model.p() as f64;
        let k = model.size() as f64;
        ln_beta(self.a + k, self.b + p - k) - ln_beta(self.a, self.b)
    }
}

pub fn model_log_prior(prior: &ModelPrior, model: &ModelIndicator) -> f64 {
    prior.log_prior(model)
}

/// An imaginary response vector together with its admissibility status.
#[derive(Debug, Clone)]
pub struct ImaginarySample {
    pub ystar: DVector<f64>,
    pub sum: usize,
    pub admissible: bool,
}

impl ImaginarySample {
    /// Checks `ystar` for separation against the full design of `data`.
    pub fn evaluate(ystar: DVector<f64>, data: &Dataset) -> Result<Self> {
        Self::evaluate_design(ystar, data.x())
    }

    pub fn evaluate_design(ystar: DVector<f64>, x: &DMatrix<f64>) -> Result<Self> {
        if ystar.len() != x.nrows() {
            return arg_err("imaginary sample length does not match n");
        }
        if ystar.iter().any(|&v| v != 0.0 && v != 1.0) {
            return arg_err("imaginary sample must be 0/1");
        }
        let admissible = !detect_separation_design(x, &ystar).separated;
        Ok(Self::with_status(ystar, admissible))
    }

    /// Builds the sample with a known admissibility flag (no LP solve).
    pub fn with_status(ystar: DVector<f64>, admissible: bool) -> Self {
        let sum = ystar.iter().filter(|&&v| v == 1.0).count();
        ImaginarySample { ystar, sum, admissible }
    }

    pub fn n(&self) -> usize {
        self.ystar.len()
    }

    /// Unnormalised log predictive weight; `-∞` when inadmissible.
    pub fn log_weight(&self) -> f64 {
        if !self.admissible {
            return f64::NEG_INFINITY;
        }
        beta_binomial_half_log_weight(self.n(), self.sum)
    }
}

/// `log Γ(s+½)Γ(n−s+½) / (Γ(n+1) Γ(½)²)`.
pub fn beta_binomial_half_log_weight(n: usize, s: usize) -> f64 {
    let (n, s) = (n as f64, s as f64);
    ln_gamma(s + 0.5) + ln_gamma(n - s + 0.5) - ln_gamma(n + 1.0) - PI.ln()
}

pub fn imaginary_log_weight(ys: &ImaginarySample) -> f64 {
    ys.log_weight()
}

/// Log density of `N(β̂(y*), δ H⁻¹(y*))` at `beta`, via the Cholesky factor of `H`.
pub fn lpep_conditional_logpdf(beta: &DVector<f64>, fit_star: &GlmFit, delta: f64) -> Result<f64> {
    let chol = linalg::cholesky(&fit_star.info, "H(y*)")?;
    conditional_logpdf_with_chol(beta, fit_star, &chol, delta)
}

pub(crate) fn conditional_logpdf_with_chol(
    beta: &DVector<f64>,
    fit_star: &GlmFit,
    chol: &linalg::Chol,
    delta: f64,
) -> Result<f64> {
    let q = fit_star.beta_hat.len();
    if beta.len() != q {
        return arg_err(format!("beta has length {} but the fit has {}", beta.len(), q));
    }
    if !(delta > 0.0) {
        return arg_err("delta must be positive");
    }
    let diff = beta - &fit_star.beta_hat;
    let quad = diff.dot(&(&fit_star.info * &diff));
    let q = q as f64;
    Ok(0.5 * linalg::chol_logdet(chol) - 0.5 * q * (2.0 * PI * delta).ln() - 0.5 * quad / delta)
}

/// LPEP log density at `beta` given one imaginary sample, with δ integrated
/// against its (normalised) hyperprior.
///
/// The δ integral uses a log-spaced trapezoid on `[max(a_γ, 1e-14), 1e6·n*]`
/// starting at 201 nodes, doubling until two successive grids agree to 1e-6.
pub fn lpep_marginal_logpdf(
    beta: &DVector<f64>,
    ys: &ImaginarySample,
    model: &ModelIndicator,
    prior: &DeltaPrior,
    data: &Dataset,
) -> Result<f64> {
    if !ys.admissible {
        return arg_err("imaginary sample is not admissible");
    }
    let xg = data.design_for(model);
    let fit = fit_mle_design(&xg, &ys.ystar, None)?;
    let chol = linalg::cholesky(&fit.info, "H(y*)")?;
    if prior.is_fixed() {
        return conditional_logpdf_with_chol(beta, &fit, &chol, prior.n_star as f64);
    }
    // near β = β̂ the integrand grows like δ^{-q/2} as δ → 0, so start well
    // below 1; the robust density jumps at its open support bound, so the
    // first node sits just inside it
    let a = prior.support_lower(model);
    let lo = if a > 0.0 { a * (1.0 + 1e-12) } else { 1e-14 };
    let hi = 1e6 * prior.n_star as f64;
    let norm = prior.log_normalizer();
    let integrand = |d: f64| {
        conditional_logpdf_with_chol(beta, &fit, &chol, d).unwrap_or(f64::NEG_INFINITY) + prior.log_prior(d, model)
            - norm
    };
    let mut points = 201;
    let mut prev = log_trapezoid_logspaced(&integrand, lo, hi, points);
    for _ in 0..14 {
        points = 2 * points - 1;
        let cur = log_trapezoid_logspaced(&integrand, lo, hi, points);
        if (cur - prev).abs() < 1e-6 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(LpepError::Numeric("δ quadrature did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(p: usize, k: usize) -> ModelIndicator {
        ModelIndicator::from_covariates(p, &(1..=k).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn hyper_g_n_at_n_star() {
        let pr = DeltaPrior::new(DeltaPriorKind::HyperGOverN, 20).unwrap();
        assert!((pr.log_prior(20.0, &model(3, 1)) - 0.25f64.ln()).abs() < 1e-15);
        assert_eq!(pr.support_lower(&model(3, 1)), 0.0);
    }

    #[test]
    fn robust_support() {
        let pr = DeltaPrior::new(DeltaPriorKind::Robust, 20).unwrap();
        // a = (20-1)/2 = 9.5
        assert_eq!(pr.log_prior(9.0, &model(3, 1)), f64::NEG_INFINITY);
        assert!(pr.log_prior(9.6, &model(3, 1)).is_finite());
        let pr21 = DeltaPrior::new(DeltaPriorKind::Robust, 21).unwrap();
        assert_eq!(pr21.support_lower(&model(3, 3)), 4.5);
        assert_eq!(pr21.support_lower(&model(3, 0)), 21.0);
    }

    #[test]
    fn fixed_is_point_mass() {
        let pr = DeltaPrior::fixed(10);
        assert_eq!(pr.log_prior(10.0, &model(2, 1)), 0.0);
        assert_eq!(pr.log_prior(10.5, &model(2, 1)), f64::NEG_INFINITY);
        assert_eq!(pr.support_lower(&model(2, 1)), 10.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let m = model(4, 2);
        let r = DeltaPrior::new(DeltaPriorKind::Robust, 30).unwrap();
        let a = r.support_lower(&m);
        let d = r.quantile(0.3, &m);
        assert!((1.0 - ((a + 1.0) / (d + 1.0)).sqrt() - 0.3).abs() < 1e-12);
        assert!((r.quantile(0.0, &m) - a).abs() < 1e-12);
        let h = DeltaPrior::new(DeltaPriorKind::HyperGOverN, 30).unwrap();
        assert!((h.quantile(0.5, &m) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn model_prior_values() {
        let mp = ModelPrior::default();
        assert!((mp.log_prior(&model(2, 0)) - (1.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((mp.log_prior(&model(2, 1)) - (1.0f64 / 6.0).ln()).abs() < 1e-12);
        for p in 1..=12usize {
            let total: f64 = (0..(1u64 << p)).map(|m| mp.log_prior(&ModelIndicator::from_mask(p, m)).exp()).sum();
            assert!((total - 1.0).abs() < 1e-10, "p={p}: {total}");
        }
        let skew = ModelPrior::new(2.0, 5.0).unwrap();
        let total: f64 = (0..64u64).map(|m| skew.log_prior(&ModelIndicator::from_mask(6, m)).exp()).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn beta_binomial_half_weights() {
        assert!((beta_binomial_half_log_weight(2, 1) - 0.125f64.ln()).abs() < 1e-14);
        assert!((beta_binomial_half_log_weight(1, 0) - 0.5f64.ln()).abs() < 1e-14);
        assert_eq!(beta_binomial_half_log_weight(1, 1), beta_binomial_half_log_weight(1, 0));
        // the weights form a distribution over s with binomial multiplicities
        let n = 9usize;
        let total: f64 = (0..=n)
            .map(|s| {
                let ln_choose = ln_gamma(n as f64 + 1.0) - ln_gamma(s as f64 + 1.0) - ln_gamma((n - s) as f64 + 1.0);
                (ln_choose + beta_binomial_half_log_weight(n, s)).exp()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_logpdf_scalar_case() {
        let fit = GlmFit {
            beta_hat: DVector::from_vec(vec![0.7]),
            info: DMatrix::from_element(1, 1, 0.75),
            log_lik_at_max: 0.0,
            converged: true,
            iterations: 0,
        };
        let at_mean = lpep_conditional_logpdf(&fit.beta_hat, &fit, 4.0).unwrap();
        // N(0.7, 4/0.75) at its mean
        let oracle = -0.5 * (2.0 * PI * 4.0 / 0.75).ln();
        assert!((at_mean - oracle).abs() < 1e-14);
        assert!((at_mean - (-1.755927)).abs() < 1e-6);
        let scaled = lpep_conditional_logpdf(&fit.beta_hat, &fit, 16.0).unwrap();
        assert!((at_mean - scaled - 0.5 * 4f64.ln()).abs() < 1e-14);
        assert!(lpep_conditional_logpdf(&fit.beta_hat, &fit, 0.0).is_err());
    }
}
