//! Gaussian computations conditional on the Pólya-Gamma weights.
//!
//! Given `ω`, the working response `zᵢ = (yᵢ − ½)/ωᵢ` is Gaussian with mean
//! `X_γβ` and covariance `Ω⁻¹`. Integrating `β` against the LPEP kernel
//! `N(β̂*, δH⁻¹)` gives `z ~ N(X_γβ̂*, Ω⁻¹ + δX_γH⁻¹X_γᵀ)`. Everything here
//! works through the `q×q` matrix `M = H/δ + X_γᵀΩX_γ` and never forms an
//! `n×n` matrix.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{arg_err, Result};
use crate::glm::{Dataset, GlmFit, ModelIndicator};
use crate::linalg::{self, weighted_gram, Chol};
use crate::priors::{DeltaPrior, ModelPrior};

/// `log φ_n(z; X_γβ̂*, Ω⁻¹ + δX_γH⁻¹X_γᵀ)` for a model design `xg`.
///
/// `y_half` is `y − ½`, so that `z = y_half ./ ω`.
pub fn z_log_density(
    xg: &DMatrix<f64>,
    y_half: &DVector<f64>,
    omega: &DVector<f64>,
    delta: f64,
    fit_star: &GlmFit,
) -> Result<f64> {
    let n = xg.nrows();
    let q = xg.ncols();
    if fit_star.beta_hat.len() != q || omega.len() != n || y_half.len() != n {
        return arg_err("dimension mismatch in z-likelihood");
    }
    if !(delta > 0.0) {
        return arg_err("delta must be positive");
    }
    let h_chol = linalg::cholesky(&fit_star.info, "H(y*)")?;
    let m = precision(xg, omega, delta, &fit_star.info);
    let m_chol = linalg::cholesky(&m, "H/δ + XᵀΩX")?;

    let fitted = xg * &fit_star.beta_hat;
    let mut omega_r2 = 0.0;
    let mut sum_log_omega = 0.0;
    let mut omega_r = DVector::zeros(n);
    for i in 0..n {
        let r = y_half[i] / omega[i] - fitted[i];
        omega_r[i] = omega[i] * r;
        omega_r2 += omega[i] * r * r;
        sum_log_omega += omega[i].ln();
    }
    let u = xg.tr_mul(&omega_r);
    let half = linalg::solve_lower(&m_chol, &u);
    let quad = omega_r2 - half.norm_squared();
    let logdet_v = q as f64 * delta.ln() + linalg::chol_logdet(&m_chol) - linalg::chol_logdet(&h_chol) - sum_log_omega;
    Ok(-0.5 * n as f64 * (2.0 * PI).ln() - 0.5 * logdet_v - 0.5 * quad)
}

/// `H/δ + X_γᵀΩX_γ`.
pub(crate) fn precision(xg: &DMatrix<f64>, omega: &DVector<f64>, delta: f64, info: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = weighted_gram(xg, omega.as_slice());
    m += info / delta;
    m
}

/// Log full conditional of `(γ, δ)` given `(y*, ω)`, up to a constant:
/// model prior plus δ prior plus the marginal z-likelihood.
#[allow(clippy::too_many_arguments)]
pub fn marginal_logpost_gamma_delta(
    data: &Dataset,
    omega: &DVector<f64>,
    model: &ModelIndicator,
    delta: f64,
    fit_star: &GlmFit,
    delta_prior: &DeltaPrior,
    model_prior: &ModelPrior,
) -> Result<f64> {
    let xg = data.design_for(model);
    let y_half = data.y().map(|v| v - 0.5);
    marginal_logpost_design(&xg, &y_half, omega, model, delta, fit_star, delta_prior, model_prior)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn marginal_logpost_design(
    xg: &DMatrix<f64>,
    y_half: &DVector<f64>,
    omega: &DVector<f64>,
    model: &ModelIndicator,
    delta: f64,
    fit_star: &GlmFit,
    delta_prior: &DeltaPrior,
    model_prior: &ModelPrior,
) -> Result<f64> {
    let lp_delta = delta_prior.log_prior(delta, model);
    if lp_delta == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(model_prior.log_prior(model) + lp_delta + z_log_density(xg, y_half, omega, delta, fit_star)?)
}

/// Draws `β ~ N(M⁻¹(X_γᵀ(y−½) + Hβ̂*/δ), M⁻¹)`.
pub fn draw_beta<R: Rng + ?Sized>(
    xg: &DMatrix<f64>,
    y_half: &DVector<f64>,
    omega: &DVector<f64>,
    delta: f64,
    fit_star: &GlmFit,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let m = precision(xg, omega, delta, &fit_star.info);
    let chol = linalg::cholesky(&m, "H/δ + XᵀΩX")?;
    let mean = conditional_mean(&chol, xg, y_half, delta, fit_star);
    let eps = DVector::from_fn(xg.ncols(), |_, _| StandardNormal.sample(rng));
    Ok(mean + linalg::solve_upper_transpose(&chol, &eps))
}

/// Mean of the `β` full conditional. `XᵀΩz` is written as `Xᵀ(y−½)`.
pub(crate) fn conditional_mean(
    chol: &Chol,
    xg: &DMatrix<f64>,
    y_half: &DVector<f64>,
    delta: f64,
    fit_star: &GlmFit,
) -> DVector<f64> {
    let rhs = xg.tr_mul(y_half) + (&fit_star.info * &fit_star.beta_hat) / delta;
    chol.solve(&rhs)
}
