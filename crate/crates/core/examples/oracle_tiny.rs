//! Exact posterior model probabilities on the n = 8 fixture against a short
//! MCMC run.

use std::path::PathBuf;

use lpep::inference::summarize;
use lpep::io::load_csv;
use lpep::oracle::exact_model_posterior;
use lpep::sampler::run_chain;
use lpep::{DeltaPrior, DeltaPriorKind, McmcConfig, RngStream};

fn main() -> lpep::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/tiny8.csv");
    let data = load_csv(&path, None, false)?;
    let exact = exact_model_posterior(&data, &DeltaPrior::fixed(data.n()), 24)?;
    println!("{} admissible imaginary samples", exact.ystar_posteriors.len());

    let cfg = McmcConfig::for_data(&data, DeltaPriorKind::FixedUnitInfo).with_iterations(2_000, 50_000);
    let s = summarize(&run_chain(&data, &cfg, &mut RngStream::new(1, 0))?)?;
    println!("{:>8} {:>8} {:>8}", "model", "exact", "mcmc");
    for (m, p) in &exact.model_posteriors {
        println!("{:>8} {p:>8.4} {:>8.4}", m.to_string(), s.model_probability(m));
    }
    Ok(())
}
