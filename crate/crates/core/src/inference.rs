//! Posterior summaries, selection metrics and predictive scores.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{arg_err, Result};
use crate::glm::{fit_mle_design, logistic, ModelIndicator};
use crate::sampler::DrawStore;

const PROB_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    /// Inclusion probabilities of covariates `1..=p`.
    pub pip: Vec<f64>,
    /// Visited models by decreasing frequency.
    pub top_models: Vec<(ModelIndicator, f64)>,
    pub map_model: ModelIndicator,
    pub bma_mean: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub mean_model_size: f64,
    pub mean_delta: f64,
}

impl PosteriorSummary {
    pub fn model_probability(&self, model: &ModelIndicator) -> f64 {
        self.top_models.iter().find(|(m, _)| m == model).map(|(_, p)| *p).unwrap_or(0.0)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let models: Vec<serde_json::Value> = self
            .top_models
            .iter()
            .map(|(m, p)| serde_json::json!({ "bits": m.bit_string(), "prob": p }))
            .collect();
        serde_json::json!({
            "pips": self.pip,
            "models": models,
            "map": {
                "bits": self.map_model.bit_string(),
                "covariates": self.map_model.covariates(),
                "prob": self.model_probability(&self.map_model),
            },
            "bma": { "mean": self.bma_mean, "lo": self.ci_lower, "hi": self.ci_upper },
            "delta_mean": self.mean_delta,
            "mean_model_size": self.mean_model_size,
        })
    }
}

/// Orders models for MAP selection: higher frequency, then fewer covariates,
/// then lexicographically smaller bit string.
fn map_order(a: &(ModelIndicator, usize), b: &(ModelIndicator, usize)) -> std::cmp::Ordering {
    b.1.cmp(&a.1).then(a.0.size().cmp(&b.0.size())).then_with(|| a.0.bit_string().cmp(&b.0.bit_string()))
}

/// Linear-interpolation sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(draws: &DrawStore) -> Result<PosteriorSummary> {
    if draws.is_empty() {
        return arg_err("cannot summarize an empty draw store");
    }
    let p = draws.p;
    let n = draws.len() as f64;
    let mut counts: HashMap<&ModelIndicator, usize> = HashMap::new();
    let mut pip = vec![0.0; p];
    let mut size = 0.0;
    let mut delta = 0.0;
    for d in &draws.draws {
        *counts.entry(&d.model).or_default() += 1;
        for (j, v) in pip.iter_mut().enumerate() {
            if d.model.includes(j + 1) {
                *v += 1.0;
            }
        }
        size += d.model.size() as f64;
        delta += d.delta;
    }
    pip.iter_mut().for_each(|v| *v /= n);
    let mut ranked: Vec<(ModelIndicator, usize)> = counts.into_iter().map(|(m, c)| (m.clone(), c)).collect();
    ranked.sort_by(map_order);
    let map_model = ranked[0].0.clone();
    let top_models = ranked.into_iter().map(|(m, c)| (m, c as f64 / n)).collect();

    let mut bma_mean = vec![0.0; p + 1];
    let mut ci_lower = vec![0.0; p + 1];
    let mut ci_upper = vec![0.0; p + 1];
    let mut column = Vec::with_capacity(draws.len());
    for j in 0..=p {
        column.clear();
        column.extend(draws.draws.iter().map(|d| d.beta[j]));
        bma_mean[j] = column.iter().sum::<f64>() / n;
        column.sort_by(f64::total_cmp);
        ci_lower[j] = quantile_sorted(&column, 0.025);
        ci_upper[j] = quantile_sorted(&column, 0.975);
    }
    Ok(PosteriorSummary {
        pip,
        top_models,
        map_model,
        bma_mean,
        ci_lower,
        ci_upper,
        mean_model_size: size / n,
        mean_delta: delta / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionMetrics {
    /// `None` when the true model is the null model.
    pub f1: Option<f64>,
    pub exact_match: bool,
    pub size: usize,
}

pub fn selection_metrics(map_model: &ModelIndicator, truth: &ModelIndicator) -> Result<SelectionMetrics> {
    if map_model.p() != truth.p() {
        return arg_err("models have different p");
    }
    let p = truth.p();
    let tp = (1..=p).filter(|&j| map_model.includes(j) && truth.includes(j)).count() as f64;
    let f1 = if truth.size() == 0 {
        None
    } else if tp == 0.0 {
        Some(0.0)
    } else {
        let precision = tp / map_model.size() as f64;
        let recall = tp / truth.size() as f64;
        Some(2.0 * precision * recall / (precision + recall))
    };
    Ok(SelectionMetrics { f1, exact_match: map_model == truth, size: map_model.size() })
}

/// Mean squared error over the covariate coefficients `1..=p`. Both vectors
/// are dense of length `p+1`; the intercept is ignored.
pub fn amse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() || estimate.len() < 2 {
        return arg_err("coefficient vectors must have equal length p+1 with p ≥ 1");
    }
    let p = estimate.len() - 1;
    Ok(estimate[1..].iter().zip(&truth[1..]).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / p as f64)
}

/// Squared error summed over all `p+1` coefficients, intercept included, and
/// divided by `p`. Published null-scenario AMSE values scale like `1/p` at a
/// level that only the intercept error can account for, so this is the
/// variant to compare against them.
pub fn amse_with_intercept(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    let covariates = amse(estimate, truth)?;
    let p = (estimate.len() - 1) as f64;
    Ok(covariates + (estimate[0] - truth[0]).powi(2) / p)
}

/// Model-averaged success probabilities for the rows of `x_new` (intercept
/// column included).
pub fn predict_bma(draws: &DrawStore, x_new: &DMatrix<f64>) -> Result<Vec<f64>> {
    if x_new.ncols() != draws.p + 1 {
        return arg_err(format!("new design has {} columns, expected {}", x_new.ncols(), draws.p + 1));
    }
    if draws.is_empty() {
        return arg_err("no draws");
    }
    let mut acc = vec![0.0f64; x_new.nrows()];
    for d in &draws.draws {
        let eta = x_new * DVector::from_column_slice(&d.beta);
        acc.iter_mut().zip(eta.iter()).for_each(|(a, &e)| *a += logistic(e));
    }
    Ok(acc.iter().map(|&a| a / draws.len() as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionMetrics {
    pub auc: Option<f64>,
    pub calibration_slope: Option<f64>,
    pub log_score: f64,
    pub brier: f64,
}

/// AUC (midranks), calibration slope, logarithmic score and Brier score.
pub fn prediction_metrics(y: &[f64], phat: &[f64]) -> Result<PredictionMetrics> {
    if y.len() != phat.len() || y.is_empty() {
        return arg_err("outcome and prediction lengths differ");
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return arg_err("outcomes must be 0/1");
    }
    let n = y.len() as f64;
    let p: Vec<f64> = phat.iter().map(|&v| v.clamp(PROB_CLIP, 1.0 - PROB_CLIP)).collect();
    let log_score = -y.iter().zip(&p).map(|(&yi, &pi)| yi * pi.ln() + (1.0 - yi) * (1.0 - pi).ln()).sum::<f64>() / n;
    let brier = y.iter().zip(phat).map(|(&yi, &pi)| (pi - yi).powi(2)).sum::<f64>() / n;
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == y.len() {
        return Ok(PredictionMetrics { auc: None, calibration_slope: None, log_score, brier });
    }
    Ok(PredictionMetrics { auc: Some(auc_midrank(y, phat)), calibration_slope: calibration_slope(y, &p), log_score, brier })
}

fn auc_midrank(y: &[f64], phat: &[f64]) -> f64 {
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| phat[a].total_cmp(&phat[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && phat[order[j + 1]] == phat[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = mid;
        }
        i = j + 1;
    }
    let n1 = y.iter().filter(|&&v| v == 1.0).count() as f64;
    let n0 = n as f64 - n1;
    let rank_sum: f64 = y.iter().zip(&ranks).filter(|(&yi, _)| yi == 1.0).map(|(_, r)| r).sum();
    (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0)
}

/// Slope of the logistic regression of `y` on `logit(p̂)`; `None` if that
/// fit does not exist (separated or degenerate).
fn calibration_slope(y: &[f64], p: &[f64]) -> Option<f64> {
    let n = y.len();
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { (p[i] / (1.0 - p[i])).ln() });
    let fit = fit_mle_design(&x, &DVector::from_column_slice(y), None).ok()?;
    fit.converged.then_some(fit.beta_hat[1])
}
