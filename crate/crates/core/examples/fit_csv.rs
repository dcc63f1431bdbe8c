//! Fit the endometrial data with a unit-information prior and print the
//! posterior summary.
//!
//!     cargo run --release --example fit_csv [path.csv] [response]

use std::path::PathBuf;

use lpep::inference::summarize;
use lpep::io::{load_csv, ResponseColumn};
use lpep::sampler::run_chain;
use lpep::{DeltaPriorKind, McmcConfig, RngStream};

fn main() -> lpep::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/endometrial.csv"));
    let response = args.next().unwrap_or_else(|| "HG".into());
    let data = load_csv(&path, Some(&ResponseColumn::parse(&response)), false)?;

    let cfg = McmcConfig::for_data(&data, DeltaPriorKind::FixedUnitInfo).with_iterations(5_000, 20_000);
    let draws = run_chain(&data, &cfg, &mut RngStream::new(cfg.seed, 0))?;
    let s = summarize(&draws)?;

    println!("{:>10} {:>6} {:>9} {:>18}", "", "PIP", "mean", "95% interval");
    for j in 0..=data.p() {
        let name = &data.column_names()[j];
        let pip = if j == 0 { 1.0 } else { s.pip[j - 1] };
        println!("{name:>10} {pip:>6.3} {:>9.3} [{:>7.3}, {:>7.3}]", s.bma_mean[j], s.ci_lower[j], s.ci_upper[j]);
    }
    println!("\ntop models:");
    for (m, p) in s.top_models.iter().take(5) {
        println!("  {m} {p:.3}");
    }
    Ok(())
}
