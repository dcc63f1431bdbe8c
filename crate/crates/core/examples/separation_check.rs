//! Separation detection: the endometrial response is separated by NV, so
//! its MLE does not exist, while a flipped label restores overlap.

use std::path::PathBuf;

use lpep::glm::{detect_separation, detect_separation_design, fit_mle_design};
use lpep::io::{load_csv, ResponseColumn};

fn main() -> lpep::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/endometrial.csv");
    let data = load_csv(&path, Some(&ResponseColumn::parse("HG")), false)?;
    let report = detect_separation(&data);
    println!("observed response: {}", serde_json::to_string(&report).expect("serializes"));

    let x = data.x().clone();
    let mut y = data.y().clone();
    // one high-grade case with NV = 1 switched to low grade
    let i = (0..data.n()).find(|&i| x[(i, 1)] == 1.0 && y[i] == 1.0).expect("exists");
    y[i] = 0.0;
    let r = detect_separation_design(&x, &y);
    println!("after flipping row {i}: separated = {}", r.separated);
    if !r.separated {
        let fit = fit_mle_design(&x, &y, None)?;
        println!("MLE {:.3?} after {} Newton steps", fit.beta_hat.as_slice(), fit.iterations);
    }
    Ok(())
}
