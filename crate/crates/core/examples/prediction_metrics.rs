//! Out-of-sample BMA predictions on simulated data: AUC, calibration slope,
//! log score and Brier score.

use lpep::inference::{predict_bma, prediction_metrics};
use lpep::sampler::run_chain;
use lpep::simgen::Scenario;
use lpep::{DeltaPriorKind, McmcConfig, RngStream};

fn main() -> lpep::Result<()> {
    let train = Scenario { n: 400, p: 8, p_true: 5, r: 0.2, seed: 1 };
    let test = Scenario { seed: 2, ..train.clone() };
    let (data, _) = train.generate()?;
    let (holdout, _) = test.generate()?;

    for kind in [DeltaPriorKind::FixedUnitInfo, DeltaPriorKind::HyperGOverN, DeltaPriorKind::Robust] {
        let cfg = McmcConfig::for_data(&data, kind).with_iterations(1_000, 10_000);
        let draws = run_chain(&data, &cfg, &mut RngStream::new(1, 0))?;
        let phat = predict_bma(&draws, holdout.x())?;
        let y: Vec<f64> = holdout.y().iter().copied().collect();
        let m = prediction_metrics(&y, &phat)?;
        println!(
            "{kind:?}: AUC {:.3}, calibration slope {:.3}, log score {:.4}, Brier {:.4}",
            m.auc.unwrap_or(f64::NAN),
            m.calibration_slope.unwrap_or(f64::NAN),
            m.log_score,
            m.brier
        );
    }
    Ok(())
}
