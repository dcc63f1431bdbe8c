//! A few replications of the sparse scenario: MAP recovery, F1 and AMSE.
//!
//!     cargo run --release --example simulate_replicate [reps]

use lpep::io::replicate;
use lpep::simgen::Scenario;
use lpep::{DeltaPrior, DeltaPriorKind, McmcConfig};

fn main() -> lpep::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let scenario = Scenario { n: 300, p: 10, p_true: 5, r: 0.3, seed: 7 };
    let mcmc = McmcConfig::new(DeltaPrior::new(DeltaPriorKind::FixedUnitInfo, scenario.n)?).with_iterations(1_000, 8_000);
    println!("true model {}", scenario.true_model()?);
    for row in replicate(&scenario, reps, &mcmc)? {
        println!(
            "rep {}: map match {}, F1 {:.2}, size {}, AMSE {:.4}",
            row.rep,
            row.map_match,
            row.f1.unwrap_or(f64::NAN),
            row.model_size,
            row.amse
        );
    }
    Ok(())
}
