//! Gaussian quadrature rules (Golub–Welsch) and log-space helpers.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights of a one-dimensional quadrature rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn golub_welsch(diag: &[f64], offdiag: &[f64], mu0: f64) -> Rule {
    let n = diag.len();
    let mut j = DMatrix::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = diag[i];
        if i + 1 < n {
            j[(i, i + 1)] = offdiag[i];
            j[(i + 1, i)] = offdiag[i];
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], mu0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() }
}

/// Gauss–Hermite rule for `∫ f(t) e^{-t²} dt`.
pub fn gauss_hermite(order: usize) -> Rule {
    let diag = vec![0.0; order];
    let off: Vec<f64> = (1..order).map(|k| (k as f64 / 2.0).sqrt()).collect();
    golub_welsch(&diag, &off, std::f64::consts::PI.sqrt())
}

/// Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_legendre_unit(order: usize) -> Rule {
    let diag = vec![0.0; order];
    let off: Vec<f64> = (1..order)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let r = golub_welsch(&diag, &off, 2.0);
    Rule {
        nodes: r.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        weights: r.weights.iter().map(|w| 0.5 * w).collect(),
    }
}

/// `log Σ exp(vᵢ)`; `-∞` for an empty or all `-∞` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `log ∫ exp(f(x)) dx` over `[lo, hi]` by trapezoid on a log-spaced grid of
/// `points` nodes (`lo > 0`).
pub fn log_trapezoid_logspaced<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, points: usize) -> f64 {
    let (llo, lhi) = (lo.ln(), hi.ln());
    let h = (lhi - llo) / (points - 1) as f64;
    // substitute x = e^u: ∫ f(x) dx = ∫ f(e^u) e^u du
    let terms: Vec<f64> = (0..points)
        .map(|k| {
            let u = llo + h * k as f64;
            let w = if k == 0 || k == points - 1 { 0.5 } else { 1.0 };
            f(u.exp()) + u + (w * h).ln()
        })
        .collect();
    log_sum_exp(&terms)
}
