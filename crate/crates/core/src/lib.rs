//! Bayesian variable selection for logistic regression under the Laplace
//! power-expected-posterior (LPEP) prior.
//!
//! The prior on the coefficients of model `γ` is a mixture of Gaussians centred
//! at the maximum-likelihood estimate computed on an imaginary response vector
//! `y*`, with covariance `δ·H⁻¹(y*)`. Imaginary samples are restricted to
//! responses that are not separable under the full design, so the prior stays
//! proper even when the observed data are separated.
//!
//! Module map:
//!
//! - [`glm`]: logistic log-likelihood, score, observed information, Newton MLE
//!   and LP-based separation detection.
//! - [`priors`]: δ hyperpriors, Beta-Binomial model prior, imaginary-sample
//!   weights and LPEP density evaluation.
//! - [`pg`]: exact Pólya-Gamma `PG(1, c)` sampler and counter-based RNG streams.
//! - [`sampler`]: the data-augmented MCMC over `(γ, δ, β, ω, y*)`.
//! - [`oracle`]: brute-force exact model posteriors for tiny instances.
//! - [`inference`]: PIPs, model probabilities, BMA summaries and metrics.
//! - [`simgen`]: simulation scenarios (AR(1) designs, true coefficients).
//! - [`io`]: CSV loading, JSON/CSV output and the command-line front end.
//!
//! The `examples/` directory of this crate has one runnable program per major
//! capability; `cargo run -p lpep --example <name>`.

pub mod error;
pub mod glm;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod pg;
pub mod priors;
pub mod quadrature;
pub mod sampler;
pub mod simgen;

pub use error::{LpepError, Result};
pub use glm::{Dataset, GlmFit, ModelIndicator, SeparationReport};
pub use inference::PosteriorSummary;
pub use pg::RngStream;
pub use priors::{DeltaPrior, DeltaPriorKind, ModelPrior};
pub use sampler::{DrawStore, McmcConfig};
