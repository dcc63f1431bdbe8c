//! Data-augmented MCMC for LPEP variable selection.
//!
//! The chain state is `(γ, δ, β_γ, ω, y*)`. Given the Pólya-Gamma weights the
//! likelihood is Gaussian in `β`, so `(γ, δ)` can be updated from a marginal
//! that has `β` integrated out and `β` then drawn exactly. The imaginary
//! sample and δ get their own Metropolis moves.

mod cache;
mod chain;
mod marginal;
mod proposals;

pub use chain::{Chain, McmcState};
pub use marginal::{draw_beta, marginal_logpost_gamma_delta, z_log_density};
pub use proposals::{model_proposal_logprob, propose_model, reflective_normal_draw, reflective_normal_logpdf};

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, LpepError, Result};
use crate::glm::{Dataset, ModelIndicator};
use crate::pg::RngStream;
use crate::priors::{DeltaPrior, DeltaPriorKind, ModelPrior};

/// Sampler settings. `iterations` counts burn-in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Probabilities of the flip and swap model moves.
    pub move_type_probs: [f64; 2],
    /// Probabilities of flipping 1..=4 covariates in a flip move.
    pub flip_count_probs: [f64; 4],
    /// Probabilities of flipping 1..=5 sites in a local `y*` move.
    pub ystar_flip_probs: [f64; 5],
    pub ystar_local_prob: f64,
    /// Scale of the reflected δ walk; `n/2` when unset.
    pub delta_walk_scale: Option<f64>,
    pub delta_prior: DeltaPrior,
    pub model_prior: ModelPrior,
    /// Starting imaginary sample; defaults to the observed response when it
    /// is not separable.
    pub initial_ystar: Option<Vec<f64>>,
    /// Largest tolerated fraction of iterations with a numeric failure.
    pub max_failure_rate: f64,
}

impl McmcConfig {
    pub fn new(delta_prior: DeltaPrior) -> Self {
        McmcConfig {
            iterations: 131_072,
            burn_in: 10_000,
            seed: 0,
            move_type_probs: [0.9, 0.1],
            flip_count_probs: [0.6, 0.2, 0.15, 0.05],
            ystar_flip_probs: [0.5, 0.2, 0.15, 0.10, 0.05],
            ystar_local_prob: 0.7,
            delta_walk_scale: None,
            delta_prior,
            model_prior: ModelPrior::default(),
            initial_ystar: None,
            max_failure_rate: 1e-3,
        }
    }

    /// Defaults with `n* = n`.
    pub fn for_data(data: &Dataset, kind: DeltaPriorKind) -> Self {
        Self::new(DeltaPrior { kind, n_star: data.n() })
    }

    pub fn with_iterations(mut self, burn_in: usize, kept: usize) -> Self {
        self.burn_in = burn_in;
        self.iterations = burn_in + kept;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, data: &Dataset) -> Result<()> {
        fn is_distribution(p: &[f64]) -> bool {
            p.iter().all(|&v| v >= 0.0 && v.is_finite()) && (p.iter().sum::<f64>() - 1.0).abs() < 1e-9
        }
        if self.iterations <= self.burn_in {
            return arg_err("iterations must exceed burn-in");
        }
        if !is_distribution(&self.move_type_probs)
            || !is_distribution(&self.flip_count_probs)
            || !is_distribution(&self.ystar_flip_probs)
        {
            return arg_err("proposal probability vectors must sum to 1");
        }
        if self.flip_count_probs[0] <= 0.0 || self.ystar_flip_probs[0] <= 0.0 {
            return arg_err("single-flip probability must be positive");
        }
        if !(0.0..=1.0).contains(&self.ystar_local_prob) {
            return arg_err("local move probability must lie in [0, 1]");
        }
        if let Some(t) = self.delta_walk_scale {
            if !(t > 0.0) {
                return arg_err("delta walk scale must be positive");
            }
        }
        if self.delta_prior.n_star == 0 {
            return arg_err("n* must be positive");
        }
        if data.p() == 0 {
            return arg_err("at least one covariate is required for model search");
        }
        if let Some(y0) = &self.initial_ystar {
            if y0.len() != data.n() {
                return arg_err("initial imaginary sample has the wrong length");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptCounter {
    pub proposed: usize,
    pub accepted: usize,
}

impl AcceptCounter {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn add(&mut self, other: &AcceptCounter) {
        self.proposed += other.proposed;
        self.accepted += other.accepted;
    }
}

/// Acceptance bookkeeping per move type.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveStats {
    pub model_delta: AcceptCounter,
    pub ystar_local: AcceptCounter,
    pub ystar_global: AcceptCounter,
    /// `y*` proposals rejected because they were separable.
    pub ystar_inadmissible: usize,
    pub delta_extra: AcceptCounter,
}

impl MoveStats {
    fn add(&mut self, other: &MoveStats) {
        self.model_delta.add(&other.model_delta);
        self.ystar_local.add(&other.ystar_local);
        self.ystar_global.add(&other.ystar_global);
        self.ystar_inadmissible += other.ystar_inadmissible;
        self.delta_extra.add(&other.delta_extra);
    }
}

/// One retained iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub iteration: usize,
    pub model: ModelIndicator,
    pub delta: f64,
    /// Dense coefficients (length `p+1`), zero where excluded.
    pub beta: Vec<f64>,
}

/// Post-burn-in draws of one or more chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawStore {
    pub p: usize,
    pub draws: Vec<Draw>,
    pub stats: MoveStats,
    pub failures: usize,
    pub iterations: usize,
    pub chains: usize,
}

impl DrawStore {
    pub fn new(p: usize) -> Self {
        DrawStore { p, draws: Vec::new(), stats: MoveStats::default(), failures: 0, iterations: 0, chains: 0 }
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Concatenates stores in order.
    pub fn merge(stores: Vec<DrawStore>) -> Result<DrawStore> {
        let mut it = stores.into_iter();
        let Some(mut out) = it.next() else {
            return arg_err("nothing to merge");
        };
        for s in it {
            if s.p != out.p {
                return arg_err("cannot merge draws with different p");
            }
            out.draws.extend(s.draws);
            out.stats.add(&s.stats);
            out.failures += s.failures;
            out.iterations += s.iterations;
            out.chains += s.chains;
        }
        Ok(out)
    }

    /// Writes the draw log: `iter,delta,gamma_bits,beta_0,...,beta_p`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iter".to_string(), "delta".into(), "gamma_bits".into()];
        header.extend((0..=self.p).map(|j| format!("beta_{j}")));
        w.write_record(&header).map_err(csv_err)?;
        for d in &self.draws {
            let mut rec = vec![d.iteration.to_string(), d.delta.to_string(), d.model.bit_string()];
            rec.extend(d.beta.iter().map(|b| b.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> LpepError {
    LpepError::Io(std::io::Error::other(e))
}

/// Runs one chain and returns its retained draws.
pub fn run_chain(data: &Dataset, config: &McmcConfig, rng: &mut RngStream) -> Result<DrawStore> {
    let mut chain = Chain::new(data, config, rng)?;
    let mut store = DrawStore::new(data.p());
    store.draws.reserve(config.iterations - config.burn_in);
    let budget = (config.max_failure_rate * config.iterations as f64).floor() as usize;
    for it in 0..config.iterations {
        if !chain.iterate(rng) {
            store.failures += 1;
            if store.failures > budget {
                return Err(LpepError::FailureBudget { failures: store.failures, iterations: it + 1 });
            }
        }
        if it >= config.burn_in {
            let s = chain.state();
            store.draws.push(Draw { iteration: it, model: s.model.clone(), delta: s.delta, beta: s.dense_beta() });
        }
    }
    store.stats = chain.stats().clone();
    store.iterations = config.iterations;
    store.chains = 1;
    Ok(store)
}

/// Worker thread count: `LPEP_THREADS` if set, else the available parallelism.
pub fn worker_threads() -> usize {
    std::env::var("LPEP_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs `chains` independent chains, chain `k` on stream `(seed, k)`, and
/// merges them in chain order.
pub fn run_chains(data: &Dataset, config: &McmcConfig, chains: usize) -> Result<DrawStore> {
    if chains == 0 {
        return arg_err("at least one chain is required");
    }
    let results = parallel_map(chains, |k| {
        let mut rng = RngStream::new(config.seed, k as u64);
        run_chain(data, config, &mut rng)
    });
    DrawStore::merge(results.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Evaluates `f(0..jobs)` on up to [`worker_threads`] threads; results keep
/// job order.
pub fn parallel_map<T, F>(jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = worker_threads().min(jobs).max(1);
    if workers == 1 {
        return (0..jobs).map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..jobs).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= jobs {
                    break;
                }
                let r = f(k);
                slots.lock().expect("worker panicked")[k] = Some(r);
            });
        }
    });
    slots.into_inner().expect("worker panicked").into_iter().map(|r| r.expect("job completed")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acceptance_rate_of_empty_counter_is_nan() {
        assert!(AcceptCounter::default().rate().is_nan());
        let c = AcceptCounter { proposed: 4, accepted: 1 };
        assert_eq!(c.rate(), 0.25);
    }

    #[test]
    fn parallel_map_keeps_order() {
        let v = parallel_map(17, |k| k * k);
        assert_eq!(v, (0..17).map(|k| k * k).collect::<Vec<_>>());
    }

    #[test]
    fn merge_rejects_mismatched_p() {
        assert!(DrawStore::merge(vec![DrawStore::new(2), DrawStore::new(3)]).is_err());
        assert!(DrawStore::merge(vec![]).is_err());
    }
}
