//! PG(1, c) draws against their closed-form mean and variance.

use lpep::pg::{pg1_mean, pg1_variance, sample_pg1};
use lpep::RngStream;

fn main() {
    let mut rng = RngStream::new(42, 0);
    let n = 200_000;
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "c", "mean", "exact", "var", "exact");
    for c in [0.0, 0.5, 1.0, 2.5, 10.0] {
        let draws: Vec<f64> = (0..n).map(|_| sample_pg1(c, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        println!("{c:>6} {mean:>10.5} {:>10.5} {var:>10.6} {:>10.6}", pg1_mean(c), pg1_variance(c));
    }
}
