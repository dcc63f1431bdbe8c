//! Exact model posteriors for tiny problems by brute force.
//!
//! Every `y* ∈ {0,1}ⁿ` is enumerated and checked for separation. For each
//! admissible `y*` and each model the integral
//! `∫ f(y | β) N(β; β̂_γ(y*), δH_γ(y*)⁻¹) dβ` is computed by a tensor
//! Gauss–Hermite rule centred and scaled at the mode of the integrand. A
//! random δ is integrated with a Gauss–Legendre rule on its prior CDF scale.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{arg_err, LpepError, Result};
use crate::glm::{
    detect_separation_design, fit_mle_design, log_likelihood_design, score_and_information_design, Dataset, GlmFit,
    ModelIndicator,
};
use crate::linalg;
use crate::priors::{beta_binomial_half_log_weight, conditional_logpdf_with_chol, DeltaPrior, ModelPrior};
use crate::quadrature::{gauss_hermite, gauss_legendre_unit, log_sum_exp, Rule};

pub const DEFAULT_QUAD_ORDER: usize = 32;
pub const MAX_N: usize = 12;
pub const MAX_P: usize = 3;
const DELTA_NODES: usize = 64;
/// Tensor nodes whose log weight is this far below the largest are skipped.
const PRUNE_LOG_WEIGHT: f64 = 60.0;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub model_log_marginals: BTreeMap<ModelIndicator, f64>,
    pub model_posteriors: BTreeMap<ModelIndicator, f64>,
    /// `Σ_{y* admissible} m̃*(y*)`.
    pub ystar_normalizer: f64,
    /// Posterior probability of each admissible `y*` (0/1 string), summed
    /// over models.
    pub ystar_posteriors: BTreeMap<String, f64>,
}

impl OracleResult {
    pub fn posterior(&self, model: &ModelIndicator) -> f64 {
        self.model_posteriors.get(model).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub quad_order: usize,
    pub model_prior: ModelPrior,
    /// Lifts the `n ≤ 12, p ≤ 3` guard.
    pub allow_large: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { quad_order: DEFAULT_QUAD_ORDER, model_prior: ModelPrior::default(), allow_large: false }
    }
}

pub fn exact_model_posterior(data: &Dataset, prior: &DeltaPrior, quad_order: usize) -> Result<OracleResult> {
    exact_model_posterior_with(data, prior, &OracleOptions { quad_order, ..OracleOptions::default() })
}

pub fn exact_model_posterior_with(data: &Dataset, prior: &DeltaPrior, opts: &OracleOptions) -> Result<OracleResult> {
    let (n, p) = (data.n(), data.p());
    if !opts.allow_large && (n > MAX_N || p > MAX_P) {
        return arg_err(format!("enumeration limited to n ≤ {MAX_N}, p ≤ {MAX_P} (got n={n}, p={p})"));
    }
    if n >= 63 || p >= 63 {
        return arg_err("enumeration impossible at this size");
    }
    if opts.quad_order == 0 {
        return arg_err("quadrature order must be positive");
    }
    let gh = gauss_hermite(opts.quad_order);

    let mut admissible = Vec::new();
    for mask in 0..(1u64 << n) {
        let ys = DVector::from_fn(n, |i, _| ((mask >> i) & 1) as f64);
        if !detect_separation_design(data.x(), &ys).separated {
            let s = mask.count_ones() as usize;
            admissible.push((ys, beta_binomial_half_log_weight(n, s)));
        }
    }
    if admissible.is_empty() {
        return Err(LpepError::Config("every imaginary sample is separable under this design".into()));
    }
    let log_z = log_sum_exp(&admissible.iter().map(|a| a.1).collect::<Vec<_>>());

    let delta_nodes: Vec<(f64, f64)> = if prior.is_fixed() {
        vec![(prior.n_star as f64, 0.0)]
    } else {
        let gl = gauss_legendre_unit(DELTA_NODES);
        gl.nodes.iter().zip(&gl.weights).map(|(&u, &w)| (u, w.ln())).collect()
    };

    let mut log_marg = BTreeMap::new();
    let mut log_post_unnorm = BTreeMap::new();
    // per y*: terms log π(γ) + log ∫ over models
    let mut ystar_terms: Vec<Vec<f64>> = vec![Vec::new(); admissible.len()];
    for mask in 0..(1u64 << p) {
        let model = ModelIndicator::from_mask(p, mask);
        let xg = data.design_for(&model);
        let lprior = opts.model_prior.log_prior(&model);
        let mut terms = Vec::with_capacity(admissible.len());
        for (k, (ys, lw)) in admissible.iter().enumerate() {
            let fit = fit_mle_design(&xg, ys, None)?;
            let mut over_delta = Vec::with_capacity(delta_nodes.len());
            for &(node, lw_delta) in &delta_nodes {
                let delta = if prior.is_fixed() { node } else { prior.quantile(node, &model) };
                over_delta.push(lw_delta + log_inner_integral(&xg, data.y(), &fit, delta, &gh)?);
            }
            let t = lw - log_z + log_sum_exp(&over_delta);
            ystar_terms[k].push(lprior + t);
            terms.push(t);
        }
        terms.sort_by(f64::total_cmp);
        let lm = log_sum_exp(&terms);
        log_marg.insert(model.clone(), lm);
        log_post_unnorm.insert(model, lprior + lm);
    }
    let total = log_sum_exp(&log_post_unnorm.values().copied().collect::<Vec<_>>());
    let model_posteriors = log_post_unnorm.into_iter().map(|(m, v)| (m, (v - total).exp())).collect();
    let ystar_posteriors = admissible
        .iter()
        .zip(&ystar_terms)
        .map(|((ys, _), t)| {
            let key: String = ys.iter().map(|&v| if v == 1.0 { '1' } else { '0' }).collect();
            (key, (log_sum_exp(t) - total).exp())
        })
        .collect();
    Ok(OracleResult { model_log_marginals: log_marg, model_posteriors, ystar_normalizer: log_z.exp(), ystar_posteriors })
}

/// `log ∫ f(y|β) N(β; β̂*, δH⁻¹) dβ` by Gauss–Hermite around the integrand's mode.
pub fn log_inner_integral(
    xg: &DMatrix<f64>,
    y: &DVector<f64>,
    fit_star: &GlmFit,
    delta: f64,
    gh: &Rule,
) -> Result<f64> {
    let h_chol = linalg::cholesky(&fit_star.info, "H(y*)")?;
    let log_h = |b: &DVector<f64>| -> Result<f64> {
        Ok(log_likelihood_design(xg, y, b)? + conditional_logpdf_with_chol(b, fit_star, &h_chol, delta)?)
    };
    let prior_prec = &fit_star.info / delta;
    let mut mode = fit_star.beta_hat.clone();
    let mut cur = log_h(&mode)?;
    for _ in 0..200 {
        let (score, info) = score_and_information_design(xg, y, &mode)?;
        let grad = score - &prior_prec * (&mode - &fit_star.beta_hat);
        if grad.amax() < 1e-11 {
            break;
        }
        let chol = linalg::cholesky(&(info + &prior_prec), "posterior precision")?;
        let step = chol.solve(&grad);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let cand = &mode + &step * t;
            let v = log_h(&cand)?;
            if v >= cur - 1e-13 * (1.0 + cur.abs()) {
                mode = cand;
                cur = v;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let (_, info) = score_and_information_design(xg, y, &mode)?;
    let prec_chol = linalg::cholesky(&(info + &prior_prec), "posterior precision")?;
    let q = mode.len();
    let log_w: Vec<f64> = gh.weights.iter().map(|w| w.ln()).collect();
    let max_lw = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor = q as f64 * max_lw - PRUNE_LOG_WEIGHT;

    let mut terms = Vec::new();
    let mut idx = vec![0usize; q];
    let sqrt2 = std::f64::consts::SQRT_2;
    loop {
        let lw: f64 = idx.iter().map(|&k| log_w[k]).sum();
        if lw >= floor {
            let t = DVector::from_fn(q, |j, _| gh.nodes[idx[j]]);
            let beta = &mode + linalg::solve_upper_transpose(&prec_chol, &(&t * sqrt2));
            terms.push(lw + log_h(&beta)? + t.norm_squared());
        }
        // odometer
        let mut j = 0;
        while j < q {
            idx[j] += 1;
            if idx[j] < gh.nodes.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == q {
            break;
        }
    }
    terms.sort_by(f64::total_cmp);
    Ok(0.5 * q as f64 * 2f64.ln() - 0.5 * linalg::chol_logdet(&prec_chol) + log_sum_exp(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::fit_mle_design;

    #[test]
    fn refuses_large_instances() {
        let x = DMatrix::from_fn(13, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let y: Vec<f64> = (0..13).map(|i| (i % 2) as f64).collect();
        let data = Dataset::from_design(y, x, vec!["(Intercept)".into(), "x".into()]).unwrap();
        assert!(exact_model_posterior(&data, &DeltaPrior::fixed(13), 8).is_err());
    }

    #[test]
    fn inner_integral_matches_fine_grid() {
        let x = DMatrix::from_row_slice(4, 1, &[1.0, 1.0, 1.0, 1.0]);
        let ys = DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0]);
        let y = DVector::from_vec(vec![1.0, 1.0, 1.0, 0.0]);
        let fit = fit_mle_design(&x, &ys, None).unwrap();
        let v = log_inner_integral(&x, &y, &fit, 4.0, &gauss_hermite(32)).unwrap();
        let mut acc = Vec::new();
        let h = 1e-3;
        for k in 0..40_000 {
            let b = -20.0 + h * k as f64;
            let beta = DVector::from_vec(vec![b]);
            let ll = log_likelihood_design(&x, &y, &beta).unwrap();
            let lp = crate::priors::lpep_conditional_logpdf(&beta, &fit, 4.0).unwrap();
            acc.push(ll + lp + h.ln());
        }
        let oracle = log_sum_exp(&acc);
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
    }
}
