//! Small dense linear-algebra helpers shared by the numerics modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{LpepError, Result};

pub type Chol = Cholesky<f64, Dyn>;

/// Cholesky factorisation that reports failure as a numeric error.
pub fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Chol> {
    m.clone()
        .cholesky()
        .ok_or_else(|| LpepError::Numeric(format!("{what} is not positive definite")))
}

/// `log|A|` from a Cholesky factor `A = LLᵀ`.
pub fn chol_logdet(chol: &Chol) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Columns `cols` of `x`, in order.
pub fn select_columns(x: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), cols.len(), |i, k| x[(i, cols[k])])
}

/// `Xᵀ diag(w) X` without forming the diagonal matrix.
pub fn weighted_gram(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut xw = x.clone();
    for (mut row, &wi) in xw.row_iter_mut().zip(w) {
        row *= wi;
    }
    let g = x.tr_mul(&xw);
    // exact symmetry regardless of summation order
    (&g + g.transpose()) * 0.5
}

/// Solve `L v = b` for the lower-triangular Cholesky factor.
pub fn solve_lower(chol: &Chol, b: &DVector<f64>) -> DVector<f64> {
    chol.l_dirty()
        .solve_lower_triangular(b)
        .expect("cholesky factor has a non-zero diagonal")
}

/// Solve `Lᵀ v = b` for the lower-triangular Cholesky factor.
pub fn solve_upper_transpose(chol: &Chol, b: &DVector<f64>) -> DVector<f64> {
    chol.l_dirty()
        .tr_solve_lower_triangular(b)
        .expect("cholesky factor has a non-zero diagonal")
}

/// Numerical rank from singular values, relative tolerance `rtol`.
pub fn numerical_rank(x: &DMatrix<f64>, rtol: f64) -> usize {
    let sv = x.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * smax).count()
}
