use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};

use super::cache::{pack_bits, AdmissibilityCache, FitCache};
use super::marginal::{draw_beta, marginal_logpost_design};
use super::proposals::{
    draw_flip_count, draw_sites, model_proposal_logprob, propose_model, reflective_normal_draw,
    reflective_normal_logpdf,
};
use super::{AcceptCounter, McmcConfig, MoveStats};
use crate::error::{LpepError, Result};
use crate::glm::{detect_separation_design, fit_mle_design, Dataset, GlmFit, ModelIndicator, OverlapCertifier};
use crate::linalg;
use crate::pg::{sample_pg1, RngStream};
use crate::priors::{lpep_conditional_logpdf, DeltaPriorKind, ImaginarySample};

const FIT_CACHE_CAPACITY: usize = 64;
const INIT_TRIES: usize = 10_000;

/// Current values of all sampled quantities.
#[derive(Debug, Clone)]
pub struct McmcState {
    pub model: ModelIndicator,
    pub delta: f64,
    /// Coefficients of the included columns, intercept first.
    pub beta: DVector<f64>,
    pub omega: DVector<f64>,
    pub ystar: ImaginarySample,
    /// MLE and information of `model` on `ystar`.
    pub fit_star: GlmFit,
    xg: DMatrix<f64>,
    ystar_key: Vec<u64>,
}

impl McmcState {
    /// Dense `p+1` coefficient vector with zeros for excluded covariates.
    pub fn dense_beta(&self) -> Vec<f64> {
        self.model.scatter(&self.beta)
    }

    fn check(&self, lower: f64) {
        debug_assert_eq!(self.beta.len(), self.model.dim());
        debug_assert_eq!(self.fit_star.beta_hat.len(), self.model.dim());
        debug_assert_eq!(self.xg.ncols(), self.model.dim());
        debug_assert!(self.ystar.admissible);
        debug_assert!(self.omega.iter().all(|&w| w > 0.0));
        debug_assert!(self.delta >= lower, "delta {} below support {}", self.delta, lower);
    }
}

/// One Markov chain over `(γ, δ, β, ω, y*)` for a fixed dataset.
///
/// Each [`Chain::iterate`] runs the joint model/δ move, the ω refresh, one
/// imaginary-sample move and the extra δ move, in that order.
pub struct Chain<'a> {
    data: &'a Dataset,
    config: McmcConfig,
    y_half: DVector<f64>,
    tau: f64,
    fits: FitCache,
    admissible: AdmissibilityCache,
    overlap: OverlapCertifier,
    state: McmcState,
    stats: MoveStats,
}

impl<'a> Chain<'a> {
    /// Validates `config` and initialises the chain state.
    pub fn new(data: &'a Dataset, config: &McmcConfig, rng: &mut RngStream) -> Result<Self> {
        config.validate(data)?;
        let n = data.n();
        let y_half = data.y().map(|v| v - 0.5);
        let tau = config.delta_walk_scale.unwrap_or(n as f64 / 2.0);
        let mut admissible = AdmissibilityCache::default();
        let ystar = initial_ystar(data, config, &mut admissible, rng)?;
        let model = ModelIndicator::null(data.p());
        let dp = &config.delta_prior;
        let delta = match dp.kind {
            DeltaPriorKind::FixedUnitInfo => dp.n_star as f64,
            DeltaPriorKind::HyperGOverN => n as f64,
            DeltaPriorKind::Robust => dp.quantile(rng.random::<f64>(), &model).max(dp.support_lower(&model) + 1e-9),
        };
        let xg = data.design_for(&model);
        let fit_star = fit_checked(&xg, &ystar.ystar, None)?;
        let chol = linalg::cholesky(&fit_star.info, "H(y*)")?;
        let eps = DVector::from_fn(xg.ncols(), |_, _| StandardNormal.sample(rng));
        let beta = &fit_star.beta_hat + linalg::solve_upper_transpose(&chol, &eps) * delta.sqrt();
        let ystar_key = pack_bits(&ystar.ystar);
        let state = McmcState { model, delta, beta, omega: DVector::from_element(n, 0.25), ystar, fit_star, xg, ystar_key };
        let mut chain = Chain {
            data,
            config: config.clone(),
            y_half,
            tau,
            fits: FitCache::new(FIT_CACHE_CAPACITY),
            admissible,
            overlap: OverlapCertifier::new(data.x()),
            state,
            stats: MoveStats::default(),
        };
        chain.step_omega(rng);
        Ok(chain)
    }

    pub fn state(&self) -> &McmcState {
        &self.state
    }

    pub fn stats(&self) -> &MoveStats {
        &self.stats
    }

    /// One full sweep. Returns `false` when a numeric failure forced a step
    /// to leave the state unchanged.
    pub fn iterate(&mut self, rng: &mut RngStream) -> bool {
        let mut ok = true;
        if let Err(e) = self.step_model_delta(rng) {
            log::warn!("model/delta step failed: {e}");
            ok = false;
        }
        self.step_omega(rng);
        if let Err(e) = self.step_ystar(rng) {
            log::warn!("imaginary-sample step failed: {e}");
            ok = false;
        }
        if let Err(e) = self.step_delta_extra(rng) {
            log::warn!("delta step failed: {e}");
            ok = false;
        }
        self.state.check(self.config.delta_prior.support_lower(&self.state.model));
        ok
    }

    /// Fit of `model` on the current imaginary sample, through the cache.
    fn fit_model(&mut self, model: &ModelIndicator, xg: &DMatrix<f64>) -> Result<GlmFit> {
        if let Some(f) = self.fits.get(model, &self.state.ystar_key) {
            return Ok(f);
        }
        let dense = self.state.model.scatter(&self.state.fit_star.beta_hat);
        let init = model.gather(&dense);
        let fit = fit_checked(xg, &self.state.ystar.ystar, Some(&init))?;
        self.fits.insert(model.clone(), self.state.ystar_key.clone(), fit.clone());
        Ok(fit)
    }

    /// Jointly updates `(γ, δ)` from their marginal given `(y*, ω)`, then
    /// redraws `β` from its full conditional whether or not the move was
    /// accepted.
    pub fn step_model_delta(&mut self, rng: &mut RngStream) -> Result<()> {
        let cfg = &self.config;
        let dp = cfg.delta_prior;
        let mp = cfg.model_prior;
        let (move_probs, flip_probs) = (cfg.move_type_probs, cfg.flip_count_probs);
        let cur = self.state.model.clone();
        let prop = propose_model(&cur, &move_probs, &flip_probs, rng);
        let a_prop = dp.support_lower(&prop);
        let delta_prop = if dp.is_fixed() {
            dp.n_star as f64
        } else {
            reflective_normal_draw(self.state.delta, a_prop, self.tau, rng)
        };
        let u: f64 = rng.random();

        let xg_prop = self.data.design_for(&prop);
        let fit_prop = self.fit_model(&prop, &xg_prop)?;
        let s = &self.state;
        let lp_prop = marginal_logpost_design(&xg_prop, &self.y_half, &s.omega, &prop, delta_prop, &fit_prop, &dp, &mp)?;
        let lp_cur = marginal_logpost_design(&s.xg, &self.y_half, &s.omega, &cur, s.delta, &s.fit_star, &dp, &mp)?;
        let mut log_ratio = lp_prop - lp_cur + model_proposal_logprob(&prop, &cur, &move_probs, &flip_probs)
            - model_proposal_logprob(&cur, &prop, &move_probs, &flip_probs);
        if !dp.is_fixed() && lp_prop > f64::NEG_INFINITY {
            let a_cur = dp.support_lower(&cur);
            log_ratio += reflective_normal_logpdf(s.delta, delta_prop, a_cur, self.tau)?
                - reflective_normal_logpdf(delta_prop, s.delta, a_prop, self.tau)?;
        }
        let accept = u.ln() < log_ratio;
        let (xg, delta, fit) = if accept { (&xg_prop, delta_prop, &fit_prop) } else { (&s.xg, s.delta, &s.fit_star) };
        let beta = draw_beta(xg, &self.y_half, &s.omega, delta, fit, rng)?;

        self.stats.model_delta.record(accept);
        if accept {
            self.state.model = prop;
            self.state.delta = delta_prop;
            self.state.fit_star = fit_prop;
            self.state.xg = xg_prop;
        }
        self.state.beta = beta;
        Ok(())
    }

    /// Replaces every `ωᵢ` by a fresh `PG(1, x_{γ,i}ᵀβ)` draw.
    pub fn step_omega(&mut self, rng: &mut RngStream) {
        let eta = &self.state.xg * &self.state.beta;
        for (w, &e) in self.state.omega.iter_mut().zip(eta.iter()) {
            *w = sample_pg1(e, rng);
        }
    }

    fn is_admissible(&mut self, key: &[u64], ystar: &DVector<f64>) -> bool {
        if let Some(a) = self.admissible.get(key) {
            return a;
        }
        let a = self.overlap.certify(ystar) || !detect_separation_design(self.data.x(), ystar).separated;
        self.admissible.insert(key.to_vec(), a);
        a
    }

    /// Local (site-flip) or global (independence) update of `y*`.
    pub fn step_ystar(&mut self, rng: &mut RngStream) -> Result<()> {
        let n = self.data.n();
        let local = rng.random::<f64>() < self.config.ystar_local_prob;
        let mut proposal = self.state.ystar.ystar.clone();
        let mut log_q_correction = 0.0;
        if local {
            let d = draw_flip_count(&self.config.ystar_flip_probs, n, rng);
            for i in draw_sites(n, d, rng) {
                proposal[i] = 1.0 - proposal[i];
            }
        } else {
            let log_odds = self.global_log_odds();
            for i in 0..n {
                let p = crate::glm::logistic(log_odds[i]);
                proposal[i] = if Bernoulli::new(p).expect("probability in [0,1]").sample(rng) { 1.0 } else { 0.0 };
            }
            // + log q(y*) − log q(y*′)
            for i in 0..n {
                log_q_correction += (self.state.ystar.ystar[i] - proposal[i]) * log_odds[i];
            }
        }
        let u: f64 = rng.random();
        let counter = if local { &mut self.stats.ystar_local } else { &mut self.stats.ystar_global };
        counter.proposed += 1;

        let key = pack_bits(&proposal);
        if !self.is_admissible(&key, &proposal) {
            self.stats.ystar_inadmissible += 1;
            return Ok(());
        }
        let sample = ImaginarySample::with_status(proposal, true);
        let model = self.state.model.clone();
        let fit_prop = match self.fits.get(&model, &key) {
            Some(f) => f,
            None => {
                let f = fit_checked(&self.state.xg, &sample.ystar, Some(&self.state.fit_star.beta_hat))?;
                self.fits.insert(model, key.clone(), f.clone());
                f
            }
        };
        let s = &self.state;
        let log_ratio = lpep_conditional_logpdf(&s.beta, &fit_prop, s.delta)? + sample.log_weight()
            - lpep_conditional_logpdf(&s.beta, &s.fit_star, s.delta)?
            - s.ystar.log_weight()
            + log_q_correction;
        if u.ln() < log_ratio {
            if local {
                self.stats.ystar_local.accepted += 1;
            } else {
                self.stats.ystar_global.accepted += 1;
            }
            self.state.ystar = sample;
            self.state.ystar_key = key;
            self.state.fit_star = fit_prop;
        }
        Ok(())
    }

    /// Per-site log-odds of the global proposal:
    /// `β₀/n + x_{i,γ₋₁}ᵀβ_{γ₋₁}/δ`.
    fn global_log_odds(&self) -> Vec<f64> {
        let s = &self.state;
        let n = self.data.n() as f64;
        let slopes = s.xg.columns(1, s.xg.ncols() - 1) * s.beta.rows(1, s.beta.len() - 1);
        slopes.iter().map(|&e| s.beta[0] / n + e / s.delta).collect()
    }

    /// Metropolis update of `δ` alone, targeting `N(β; β̂*, δH⁻¹)·f(δ|γ)`.
    /// A no-op for the fixed prior.
    pub fn step_delta_extra(&mut self, rng: &mut RngStream) -> Result<()> {
        let dp = self.config.delta_prior;
        if dp.is_fixed() {
            return Ok(());
        }
        let s = &self.state;
        let a = dp.support_lower(&s.model);
        let prop = reflective_normal_draw(s.delta, a, self.tau, rng);
        let u: f64 = rng.random();
        let lp_prop = dp.log_prior(prop, &s.model);
        let accept = if lp_prop == f64::NEG_INFINITY {
            false
        } else {
            let log_ratio = lpep_conditional_logpdf(&s.beta, &s.fit_star, prop)? + lp_prop
                - lpep_conditional_logpdf(&s.beta, &s.fit_star, s.delta)?
                - dp.log_prior(s.delta, &s.model)
                + reflective_normal_logpdf(s.delta, prop, a, self.tau)?
                - reflective_normal_logpdf(prop, s.delta, a, self.tau)?;
            u.ln() < log_ratio
        };
        self.stats.delta_extra.record(accept);
        if accept {
            self.state.delta = prop;
        }
        Ok(())
    }
}

impl AcceptCounter {
    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        if accepted {
            self.accepted += 1;
        }
    }
}

/// Newton fit that treats non-convergence as a numeric failure.
fn fit_checked(xg: &DMatrix<f64>, y: &DVector<f64>, init: Option<&DVector<f64>>) -> Result<GlmFit> {
    let fit = fit_mle_design(xg, y, init)?;
    if !fit.converged {
        return Err(LpepError::Numeric(format!("MLE did not converge in {} iterations", fit.iterations)));
    }
    Ok(fit)
}

fn initial_ystar(
    data: &Dataset,
    config: &McmcConfig,
    cache: &mut AdmissibilityCache,
    rng: &mut RngStream,
) -> Result<ImaginarySample> {
    if let Some(y0) = &config.initial_ystar {
        let s = ImaginarySample::evaluate(DVector::from_vec(y0.clone()), data)?;
        if !s.admissible {
            return Err(LpepError::Config("supplied initial imaginary sample is separable under the full design".into()));
        }
        return Ok(s);
    }
    let observed = ImaginarySample::evaluate(data.y().clone(), data)?;
    if observed.admissible {
        cache.insert(pack_bits(&observed.ystar), true);
        return Ok(observed);
    }
    let n = data.n();
    for _ in 0..INIT_TRIES {
        let mut v = DVector::zeros(n);
        for i in draw_sites(n, n / 2, rng) {
            v[i] = 1.0;
        }
        let s = ImaginarySample::evaluate(v, data)?;
        cache.insert(pack_bits(&s.ystar), s.admissible);
        if s.admissible {
            return Ok(s);
        }
    }
    Err(LpepError::Config("design admits no balanced admissible y* found; supply one".into()))
}
