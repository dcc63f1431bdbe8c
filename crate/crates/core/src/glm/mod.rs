//! Logistic-regression numerics: log-likelihood, score, observed information,
//! Newton maximum likelihood and separation detection.
//!
//! Everything here is a pure function of its arguments. The design-level
//! functions (`*_design`) work on an already-extracted `X_γ` and an arbitrary
//! 0/1 response, which is what the sampler needs for imaginary samples; the
//! `Dataset`-level wrappers select the columns of a model first.

mod separation;
pub mod simplex;

pub use separation::{
    detect_separation, detect_separation_design, OverlapCertifier, SeparationDetector, SeparationReport,
};

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, LpepError, Result};
use crate::linalg::{self, numerical_rank, select_columns, weighted_gram};

/// Newton stops once `‖score‖∞` drops to this value.
pub const SCORE_TOL: f64 = 1e-8;
/// Newton iteration cap.
pub const MAX_NEWTON_ITER: usize = 100;
const MAX_HALVINGS: usize = 30;

/// Binary responses plus the full design (intercept in column 0).
#[derive(Debug, Clone)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
    column_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from covariates without the intercept column; the
    /// intercept is prepended here.
    pub fn new(y: Vec<f64>, covariates: DMatrix<f64>, column_names: Vec<String>) -> Result<Self> {
        let n = covariates.nrows();
        let mut x = DMatrix::from_element(n, covariates.ncols() + 1, 1.0);
        x.view_mut((0, 1), (n, covariates.ncols())).copy_from(&covariates);
        let mut names = Vec::with_capacity(column_names.len() + 1);
        names.push("(Intercept)".to_string());
        names.extend(column_names);
        Self::from_design(y, x, names)
    }

    /// Builds a dataset from a design that already contains the intercept.
    pub fn from_design(y: Vec<f64>, x: DMatrix<f64>, column_names: Vec<String>) -> Result<Self> {
        let (n, cols) = x.shape();
        if y.len() != n {
            return arg_err(format!("response has length {} but design has {} rows", y.len(), n));
        }
        if cols == 0 || x.column(0).iter().any(|&v| v != 1.0) {
            return Err(LpepError::Data("first design column must be all ones".into()));
        }
        if column_names.len() != cols {
            return arg_err(format!("{} column names for {} columns", column_names.len(), cols));
        }
        if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(LpepError::Data(format!("response value {} at row {} is not 0/1", y[i], i + 1)));
        }
        if let Some(idx) = x.iter().position(|v| !v.is_finite()) {
            return Err(LpepError::Data(format!(
                "non-finite design value at row {}, column {}",
                idx % n + 1,
                idx / n + 1
            )));
        }
        if n <= cols {
            return Err(LpepError::Data(format!("need n > p+1, got n={n}, p+1={cols}")));
        }
        if numerical_rank(&x, 1e-10) < cols {
            return Err(LpepError::Data("design matrix is rank deficient".into()));
        }
        Ok(Dataset { y: DVector::from_vec(y), x, column_names })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of candidate covariates (intercept excluded).
    pub fn p(&self) -> usize {
        self.x.ncols() - 1
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// `X_γ`: the intercept plus the columns included in `model`.
    pub fn design_for(&self, model: &ModelIndicator) -> DMatrix<f64> {
        select_columns(&self.x, &model.columns())
    }

    /// Same design, different response vector.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Dataset> {
        if y.len() != self.n() {
            return arg_err("response length mismatch");
        }
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(LpepError::Data("response must be 0/1".into()));
        }
        Ok(Dataset { y: DVector::from_vec(y), x: self.x.clone(), column_names: self.column_names.clone() })
    }
}

/// Inclusion vector `γ` of length `p+1`; the intercept (index 0) is always in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelIndicator {
    gamma: Vec<bool>,
}

impl ModelIndicator {
    pub fn new(gamma: Vec<bool>) -> Result<Self> {
        match gamma.first() {
            Some(true) => Ok(ModelIndicator { gamma }),
            Some(false) => arg_err("gamma[0] (intercept) must be 1"),
            None => arg_err("empty inclusion vector"),
        }
    }

    /// Intercept-only model.
    pub fn null(p: usize) -> Self {
        let mut gamma = vec![false; p + 1];
        gamma[0] = true;
        ModelIndicator { gamma }
    }

    pub fn full(p: usize) -> Self {
        ModelIndicator { gamma: vec![true; p + 1] }
    }

    /// Model including the 1-based covariate indices in `covariates`.
    pub fn from_covariates(p: usize, covariates: &[usize]) -> Result<Self> {
        let mut m = Self::null(p);
        for &j in covariates {
            if j == 0 || j > p {
                return arg_err(format!("covariate index {j} outside 1..={p}"));
            }
            m.gamma[j] = true;
        }
        Ok(m)
    }

    /// Parses a 0/1 string over covariates `1..=p`, e.g. `"101"`.
    pub fn from_bit_string(bits: &str) -> Result<Self> {
        let mut gamma = vec![true];
        for c in bits.chars() {
            match c {
                '0' => gamma.push(false),
                '1' => gamma.push(true),
                _ => return arg_err(format!("invalid model bit string {bits:?}")),
            }
        }
        Ok(ModelIndicator { gamma })
    }

    /// Model from the low `p` bits of `mask` (bit `j-1` ↔ covariate `j`).
    pub fn from_mask(p: usize, mask: u64) -> Self {
        let mut m = Self::null(p);
        for j in 1..=p {
            m.gamma[j] = (mask >> (j - 1)) & 1 == 1;
        }
        m
    }

    pub fn p(&self) -> usize {
        self.gamma.len() - 1
    }

    /// `p_γ`, the number of included covariates.
    pub fn size(&self) -> usize {
        self.gamma[1..].iter().filter(|&&g| g).count()
    }

    /// `p_γ + 1`.
    pub fn dim(&self) -> usize {
        self.size() + 1
    }

    pub fn includes(&self, j: usize) -> bool {
        self.gamma[j]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.gamma
    }

    /// Design column indices, intercept first.
    pub fn columns(&self) -> Vec<usize> {
        self.gamma.iter().enumerate().filter(|(_, &g)| g).map(|(j, _)| j).collect()
    }

    /// Included covariates (1-based, intercept excluded).
    pub fn covariates(&self) -> Vec<usize> {
        self.columns().into_iter().skip(1).collect()
    }

    /// Toggles covariate `j`; the intercept cannot be flipped.
    pub fn flip(&mut self, j: usize) {
        assert!(j >= 1 && j < self.gamma.len(), "cannot flip index {j}");
        self.gamma[j] = !self.gamma[j];
    }

    /// 0/1 string over covariates `1..=p`.
    pub fn bit_string(&self) -> String {
        self.gamma[1..].iter().map(|&g| if g { '1' } else { '0' }).collect()
    }

    /// Scatters a coefficient vector of length `p_γ+1` into a dense `p+1` vector.
    pub fn scatter(&self, beta: &DVector<f64>) -> Vec<f64> {
        let mut dense = vec![0.0; self.gamma.len()];
        for (k, j) in self.columns().into_iter().enumerate() {
            dense[j] = beta[k];
        }
        dense
    }

    /// Picks this model's entries out of a dense `p+1` vector.
    pub fn gather(&self, dense: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.columns().into_iter().map(|j| dense[j]))
    }
}

impl fmt::Display for ModelIndicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.gamma[1..].iter().map(|&g| if g { "1" } else { "0" }).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Maximum-likelihood fit of one model on one response vector.
#[derive(Debug, Clone)]
pub struct GlmFit {
    pub beta_hat: DVector<f64>,
    /// Observed information at `beta_hat`.
    pub info: DMatrix<f64>,
    pub log_lik_at_max: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// `log(1 + e^η)` without overflow.
#[inline]
pub fn softplus(eta: f64) -> f64 {
    if eta > 30.0 {
        eta + (-eta).exp()
    } else {
        eta.exp().ln_1p()
    }
}

/// Logistic function `1 / (1 + e^{-η})`.
#[inline]
pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn check_beta(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> Result<()> {
    if beta.len() != x.ncols() {
        return arg_err(format!("beta has length {} but model has {} columns", beta.len(), x.ncols()));
    }
    if y.len() != x.nrows() {
        return arg_err("response length does not match design rows");
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return arg_err("beta has non-finite entries");
    }
    Ok(())
}

/// `Σ yᵢηᵢ − log(1+e^{ηᵢ})` for `η = Xβ`.
pub fn log_likelihood_design(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> Result<f64> {
    check_beta(x, y, beta)?;
    Ok(loglik_unchecked(x, y, beta))
}

fn loglik_unchecked(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter().zip(y.iter()).map(|(&e, &yi)| yi * e - softplus(e)).sum()
}

/// Score `Xᵀ(y − θ)` and observed information `Xᵀ diag(θ(1−θ)) X`.
pub fn score_and_information_design(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_beta(x, y, beta)?;
    Ok(score_info_unchecked(x, y, beta))
}

fn score_info_unchecked(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eta = x * beta;
    let theta: Vec<f64> = eta.iter().map(|&e| logistic(e)).collect();
    let resid = DVector::from_iterator(y.len(), y.iter().zip(&theta).map(|(&yi, &t)| yi - t));
    let w: Vec<f64> = theta.iter().map(|&t| t * (1.0 - t)).collect();
    (x.tr_mul(&resid), weighted_gram(x, &w))
}

/// Newton–Raphson with step-halving. Warm-starts from `init` when given.
pub fn fit_mle_design(x: &DMatrix<f64>, y: &DVector<f64>, init: Option<&DVector<f64>>) -> Result<GlmFit> {
    let q = x.ncols();
    let mut beta = match init {
        Some(b) => {
            check_beta(x, y, b)?;
            b.clone()
        }
        None => DVector::zeros(q),
    };
    if y.len() != x.nrows() {
        return arg_err("response length does not match design rows");
    }
    let mut ll = loglik_unchecked(x, y, &beta);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_NEWTON_ITER {
        let (score, info) = score_info_unchecked(x, y, &beta);
        if score.amax() <= SCORE_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        let chol = linalg::cholesky(&info, "observed information")?;
        let step = chol.solve(&score);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..=MAX_HALVINGS {
            let cand = &beta + &step * t;
            let ll_c = loglik_unchecked(x, y, &cand);
            // round-off allowance: near the optimum ll is flat to machine precision
            if ll_c.is_finite() && ll_c >= ll - 1e-12 * (1.0 + ll.abs()) {
                beta = cand;
                ll = ll_c;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    if !converged {
        let (score, _) = score_info_unchecked(x, y, &beta);
        converged = score.amax() <= SCORE_TOL;
    }
    let (_, info) = score_info_unchecked(x, y, &beta);
    linalg::cholesky(&info, "observed information at the MLE")?;
    Ok(GlmFit { beta_hat: beta, info, log_lik_at_max: ll, converged, iterations })
}

pub fn log_likelihood(data: &Dataset, model: &ModelIndicator, beta: &DVector<f64>) -> Result<f64> {
    check_model(data, model)?;
    log_likelihood_design(&data.design_for(model), data.y(), beta)
}

pub fn score_and_information(
    data: &Dataset,
    model: &ModelIndicator,
    beta: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_model(data, model)?;
    score_and_information_design(&data.design_for(model), data.y(), beta)
}

pub fn fit_mle(data: &Dataset, model: &ModelIndicator, init: Option<&DVector<f64>>) -> Result<GlmFit> {
    check_model(data, model)?;
    fit_mle_design(&data.design_for(model), data.y(), init)
}

fn check_model(data: &Dataset, model: &ModelIndicator) -> Result<()> {
    if model.p() != data.p() {
        return arg_err(format!("model has p={} but data has p={}", model.p(), data.p()));
    }
    Ok(())
}
