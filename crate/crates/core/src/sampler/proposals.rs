//! Proposal kernels: model random walk, reflected Gaussian walk for δ and
//! the site-flip kernel shared by the model and imaginary-sample moves.

use std::f64::consts::PI;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::factorial::ln_binomial;

use crate::error::{arg_err, Result};
use crate::glm::ModelIndicator;

/// Draws a flip count from `probs` (index 0 ↦ one flip), restricted to at most
/// `max` flips.
pub(crate) fn draw_flip_count<R: Rng + ?Sized>(probs: &[f64], max: usize, rng: &mut R) -> usize {
    let k = probs.len().min(max);
    let dist = WeightedIndex::new(&probs[..k]).expect("flip probabilities are positive");
    dist.sample(rng) + 1
}

/// Probability that [`draw_flip_count`] returns `d`.
fn flip_count_prob(probs: &[f64], max: usize, d: usize) -> f64 {
    let k = probs.len().min(max);
    if d == 0 || d > k {
        return 0.0;
    }
    probs[d - 1] / probs[..k].iter().sum::<f64>()
}

/// `d` distinct indices out of `0..len`, uniformly.
pub(crate) fn draw_sites<R: Rng + ?Sized>(len: usize, d: usize, rng: &mut R) -> Vec<usize> {
    index::sample(rng, len, d).into_vec()
}

/// Random-walk proposal over models.
///
/// With probability `move_probs[0]` flip `d` distinct covariates, `d` drawn
/// from `flip_probs`; otherwise swap one included covariate for an excluded
/// one. A swap is impossible from the null and full models, in which case the
/// flip move is used instead. The intercept is never touched.
pub fn propose_model<R: Rng + ?Sized>(
    model: &ModelIndicator,
    move_probs: &[f64; 2],
    flip_probs: &[f64],
    rng: &mut R,
) -> ModelIndicator {
    let p = model.p();
    let mut out = model.clone();
    let swap_possible = model.size() > 0 && model.size() < p;
    let swap = swap_possible && rng.random::<f64>() >= move_probs[0];
    if swap {
        let inc = model.covariates();
        let exc: Vec<usize> = (1..=p).filter(|&j| !model.includes(j)).collect();
        out.flip(inc[rng.random_range(0..inc.len())]);
        out.flip(exc[rng.random_range(0..exc.len())]);
    } else {
        let d = draw_flip_count(flip_probs, p, rng);
        for j in draw_sites(p, d, rng) {
            out.flip(j + 1);
        }
    }
    out
}

/// `log q(to | from)` for [`propose_model`].
///
/// The kernel is symmetric between models that both admit a swap; the
/// null and full models only use flips, so moves touching them need this
/// correction.
pub fn model_proposal_logprob(
    from: &ModelIndicator,
    to: &ModelIndicator,
    move_probs: &[f64; 2],
    flip_probs: &[f64],
) -> f64 {
    let p = from.p();
    let hamming = (1..=p).filter(|&j| from.includes(j) != to.includes(j)).count();
    let swap_possible = from.size() > 0 && from.size() < p;
    let flip_weight = if swap_possible { move_probs[0] } else { 1.0 };
    let mut prob = 0.0;
    let pd = flip_count_prob(flip_probs, p, hamming);
    if pd > 0.0 {
        prob += flip_weight * pd * (-ln_binomial(p as u64, hamming as u64)).exp();
    }
    if swap_possible && hamming == 2 && from.size() == to.size() {
        prob += move_probs[1] / (from.size() * (p - from.size())) as f64;
    }
    prob.ln()
}

/// `log q(δ' | δ)` for the Gaussian walk reflected at `boundary`:
/// `φ_τ(δ'−δ) + φ_τ(2a−δ'−δ)` on `δ' ≥ a`.
pub fn reflective_normal_logpdf(proposed: f64, current: f64, boundary: f64, scale: f64) -> Result<f64> {
    if proposed < boundary {
        return arg_err(format!("proposal {proposed} lies below the reflection boundary {boundary}"));
    }
    if !(scale > 0.0) {
        return arg_err("reflection walk scale must be positive");
    }
    let z1 = (proposed - current) / scale;
    let z2 = (2.0 * boundary - proposed - current) / scale;
    // log(e^{-z1²/2} + e^{-z2²/2}) with the larger term factored out
    let (a, b) = (-0.5 * z1 * z1, -0.5 * z2 * z2);
    let m = a.max(b);
    let lse = m + ((a - m).exp() + (b - m).exp()).ln();
    Ok(lse - 0.5 * (2.0 * PI).ln() - scale.ln())
}

/// `a + |ε − a|` with `ε ~ N(current, scale²)`.
pub fn reflective_normal_draw<R: Rng + ?Sized>(current: f64, boundary: f64, scale: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    let eps = current + scale * z;
    boundary + (eps - boundary).abs()
}
