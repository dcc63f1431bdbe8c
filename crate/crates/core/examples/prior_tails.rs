//! Radial profile of the δ-marginalized prior density under the three δ
//! priors, with the local log-log slope.

use lpep::glm::{Dataset, ModelIndicator};
use lpep::priors::{lpep_marginal_logpdf, ImaginarySample};
use lpep::{DeltaPrior, DeltaPriorKind, RngStream};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

fn main() -> lpep::Result<()> {
    let n = 30;
    let mut rng = RngStream::new(3, 0);
    let cov = DMatrix::from_fn(n, 2, |_, _| StandardNormal.sample(&mut rng));
    let y: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
    let data = Dataset::new(y.clone(), cov, vec!["x1".into(), "x2".into()])?;
    let ys = ImaginarySample::evaluate(DVector::from_vec(y), &data)?;
    let model = ModelIndicator::from_covariates(2, &[1])?;
    let dir = DVector::from_vec(vec![1.0, -1.0]).normalize();

    println!("{:>6} {:>17} {:>17} {:>17}", "s", "fixed", "hyper-g/n", "robust");
    let priors = [
        DeltaPrior::fixed(n),
        DeltaPrior::new(DeltaPriorKind::HyperGOverN, n)?,
        DeltaPrior::new(DeltaPriorKind::Robust, n)?,
    ];
    for s in [0.5, 2.0, 10.0, 50.0, 200.0] {
        let row: Vec<String> = priors
            .iter()
            .map(|pr| {
                let f = |r: f64| lpep_marginal_logpdf(&(&dir * r), &ys, &model, pr, &data);
                match (f(s), f(s * 1.05), f(s * 0.95)) {
                    (Ok(v), Ok(a), Ok(b)) => format!("{v:>9.1}/{:>6.1}", (a - b) / (1.05f64 / 0.95).ln()),
                    (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => format!("err: {e}"),
                }
            })
            .collect();
        println!("{s:>6} {}", row.iter().map(|r| format!("{r:>17}")).collect::<String>());
    }
    println!("(log density / local slope)");
    Ok(())
}
