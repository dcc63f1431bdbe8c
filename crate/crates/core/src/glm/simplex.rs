//! Dense two-phase primal simplex for `min cᵀx  s.t.  Ax = b, x ≥ 0`.
//!
//! Sized for problems with few rows (tens) and up to a few thousand columns,
//! which is the shape of the separation LP once it is posed in its dual form.
//! Pricing is Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots so the method cannot cycle.

use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: DVector<f64>,
    /// Simplex multipliers `π = c_B B⁻¹` of the equality rows.
    pub duals: DVector<f64>,
    pub iterations: usize,
}

struct Tableau {
    /// `B⁻¹ [A_s | I]`, with `A_s` the sign-normalised constraint matrix.
    t: DMatrix<f64>,
    rhs: DVector<f64>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let m = self.t.nrows();
        let piv = self.t[(row, col)];
        {
            let mut r = self.t.row_mut(row);
            r /= piv;
        }
        self.rhs[row] /= piv;
        let prow = self.t.row(row).clone_owned();
        let prhs = self.rhs[row];
        for i in 0..m {
            if i == row {
                continue;
            }
            let f = self.t[(i, col)];
            if f != 0.0 {
                for (c, &v) in prow.iter().enumerate() {
                    self.t[(i, c)] -= f * v;
                }
                self.rhs[i] -= f * prhs;
            }
        }
        self.basis[row] = col;
    }

    /// Multipliers for cost vector `cost` (length ncols + m) in the signed system.
    fn multipliers(&self, cost: &[f64]) -> DVector<f64> {
        let m = self.t.nrows();
        let binv = self.t.columns(self.ncols, m);
        let cb = DVector::from_iterator(m, self.basis.iter().map(|&j| cost[j]));
        binv.tr_mul(&cb)
    }
}

/// Runs simplex iterations with `cost`; columns `>= allow_upto` may not enter.
fn iterate(
    tab: &mut Tableau,
    a_signed: &DMatrix<f64>,
    cost: &[f64],
    allow_upto: usize,
    max_iter: usize,
    iters: &mut usize,
) -> LpStatus {
    let m = a_signed.nrows();
    let mut degenerate_run = 0usize;
    loop {
        if *iters >= max_iter {
            return LpStatus::IterationLimit;
        }
        let pi = tab.multipliers(cost);
        let bland = degenerate_run > 50;
        let mut entering = None;
        let mut best = -COST_TOL;
        let mut in_basis = vec![false; tab.ncols + m];
        for &b in &tab.basis {
            in_basis[b] = true;
        }
        for j in 0..allow_upto {
            if in_basis[j] {
                continue;
            }
            let aj = if j < tab.ncols { a_signed.column(j).dot(&pi) } else { pi[j - tab.ncols] };
            let r = cost[j] - aj;
            if r < best {
                entering = Some(j);
                if bland {
                    break;
                }
                best = r;
            }
        }
        let Some(col) = entering else {
            return LpStatus::Optimal;
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = tab.t[(i, col)];
            if a > PIVOT_TOL {
                let ratio = tab.rhs[i] / a;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-14 || (ratio <= lr + 1e-14 && tab.basis[i] < tab.basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((row, ratio)) = leave else {
            return LpStatus::Unbounded;
        };
        degenerate_run = if ratio.abs() < 1e-14 { degenerate_run + 1 } else { 0 };
        tab.pivot(row, col);
        for v in tab.rhs.iter_mut() {
            if *v < 0.0 && *v > -1e-12 {
                *v = 0.0;
            }
        }
        *iters += 1;
    }
}

/// Solves `min cᵀx  s.t.  Ax = b, x ≥ 0`.
pub fn solve_standard_form(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>, max_iter: usize) -> LpSolution {
    let (m, ncols) = a.shape();
    assert_eq!(b.len(), m);
    assert_eq!(c.len(), ncols);

    let signs: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut a_signed = a.clone();
    for i in 0..m {
        if signs[i] < 0.0 {
            let mut r = a_signed.row_mut(i);
            r.neg_mut();
        }
    }
    let rhs = DVector::from_iterator(m, b.iter().zip(&signs).map(|(v, s)| v * s));
    let mut t = DMatrix::zeros(m, ncols + m);
    t.columns_mut(0, ncols).copy_from(&a_signed);
    for i in 0..m {
        t[(i, ncols + i)] = 1.0;
    }
    let mut tab = Tableau { t, rhs, basis: (ncols..ncols + m).collect(), ncols };
    let mut iters = 0usize;

    // phase 1: minimise the sum of artificials
    let mut cost1 = vec![0.0; ncols + m];
    for v in cost1.iter_mut().skip(ncols) {
        *v = 1.0;
    }
    let st = iterate(&mut tab, &a_signed, &cost1, ncols, max_iter, &mut iters);
    let infeas: f64 = tab.basis.iter().zip(tab.rhs.iter()).filter(|(&j, _)| j >= ncols).map(|(_, &v)| v).sum();
    let fail = |status, iters| LpSolution {
        status,
        objective: f64::NAN,
        x: DVector::zeros(ncols),
        duals: DVector::zeros(m),
        iterations: iters,
    };
    if st == LpStatus::IterationLimit {
        return fail(st, iters);
    }
    let scale = 1.0 + b.amax();
    if infeas > 1e-9 * scale {
        return fail(LpStatus::Infeasible, iters);
    }
    // drive zero-level artificials out of the basis where possible
    for row in 0..m {
        if tab.basis[row] >= ncols {
            if let Some(col) = (0..ncols).find(|&j| tab.t[(row, j)].abs() > 1e-9) {
                tab.pivot(row, col);
            }
        }
    }

    // phase 2
    let mut cost2 = vec![0.0; ncols + m];
    cost2[..ncols].copy_from_slice(c.as_slice());
    let st = iterate(&mut tab, &a_signed, &cost2, ncols, max_iter, &mut iters);
    if st != LpStatus::Optimal {
        return fail(st, iters);
    }
    let mut x = DVector::zeros(ncols);
    for (row, &j) in tab.basis.iter().enumerate() {
        if j < ncols {
            x[j] = tab.rhs[row].max(0.0);
        }
    }
    let pi_signed = tab.multipliers(&cost2);
    let duals = DVector::from_iterator(m, pi_signed.iter().zip(&signs).map(|(p, s)| p * s));
    LpSolution { status: LpStatus::Optimal, objective: c.dot(&x), x, duals, iterations: iters }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_textbook_problem() {
        // min -x1 - 2x2 s.t. x1 + x2 + s1 = 4, x1 + 3x2 + s2 = 6
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 1.0, 0.0, 1.0, 3.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![4.0, 6.0]);
        let c = DVector::from_vec(vec![-1.0, -2.0, 0.0, 0.0]);
        let sol = solve_standard_form(&a, &b, &c, 1000);
        assert_eq!(sol.status, LpStatus::Optimal);
        // optimum at x1 = 3, x2 = 1 → -5
        assert!((sol.objective + 5.0).abs() < 1e-10);
        // strong duality
        assert!((sol.duals.dot(&b) - sol.objective).abs() < 1e-10);
    }

    #[test]
    fn detects_infeasible() {
        // x1 + x2 = -1 with x ≥ 0
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let sol = solve_standard_form(&a, &DVector::from_vec(vec![-1.0]), &DVector::zeros(2), 100);
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        // min -x1 s.t. x1 - x2 = 1
        let a = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let sol = solve_standard_form(&a, &DVector::from_vec(vec![1.0]), &DVector::from_vec(vec![-1.0, 0.0]), 100);
        assert_eq!(sol.status, LpStatus::Unbounded);
    }
}
