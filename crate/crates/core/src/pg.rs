//! Exact Pólya-Gamma `PG(1, c)` sampling and reproducible random streams.
//!
//! The sampler is Devroye's alternating-series method as adapted by Polson,
//! Scott and Windle: draw from the exponentially tilted Jacobi distribution
//! `J*(1, |c|/2)` by mixing a truncated exponential (right of `t = 0.64`) and a
//! truncated inverse Gaussian (left of `t`), then accept or reject by
//! evaluating the alternating series until it brackets the uniform. A draw
//! from `J*` divided by 4 is a `PG(1, c)` draw.

use std::f64::consts::{FRAC_2_PI, PI};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use statrs::function::erf::erfc;

/// Seeded counter-based random stream.
///
/// ChaCha20 keyed by `seed`, with the 64-bit stream id selecting an
/// independent keystream. Identical `(seed, stream)` pairs produce identical
/// sequences on every platform.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngStream { inner }
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u: f64 = self.inner.random();
            if u > 0.0 {
                return u;
            }
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

const TRUNC: f64 = 0.64;
/// Proposal attempts per draw before giving up; never reached in practice.
pub const MAX_PROPOSALS: usize = 1000;

/// `E[PG(1, c)] = tanh(c/2) / (2c)`, with the limit 1/4 at 0.
pub fn pg1_mean(c: f64) -> f64 {
    let c = c.abs();
    if c < 1e-4 {
        // tanh(x)/x = 1 - x²/3 + 2x⁴/15 with x = c/2
        let x2 = 0.25 * c * c;
        0.25 * (1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0)
    } else {
        (0.5 * c).tanh() / (2.0 * c)
    }
}

/// `Var[PG(1, c)]`; 1/24 at 0.
pub fn pg1_variance(c: f64) -> f64 {
    let c = c.abs();
    if c == 0.0 {
        return 1.0 / 24.0;
    }
    // (sinh c − c) / (4c³ cosh²(c/2)); the numerator by its series when small
    let ch = (0.5 * c).cosh();
    let num = if c < 1.0 {
        let (mut term, mut sum, c2) = (c * c * c / 6.0, 0.0, c * c);
        let mut k = 3.0;
        while term > sum * 1e-17 {
            sum += term;
            term *= c2 / ((k + 1.0) * (k + 2.0));
            k += 2.0;
        }
        sum
    } else {
        c.sinh() - c
    };
    num / (4.0 * c.powi(3) * ch * ch)
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// n-th coefficient of the alternating series for the Jacobi density.
fn series_coef(n: usize, x: f64) -> f64 {
    let k = n as f64 + 0.5;
    if x > TRUNC {
        PI * k * (-0.5 * k * k * PI * PI * x).exp()
    } else {
        PI * k * (FRAC_2_PI / x).powf(1.5) * (-2.0 * k * k / x).exp()
    }
}

/// `P(IG(1/z, 1) < t)`.
fn inv_gauss_cdf(t: f64, z: f64) -> f64 {
    let rt = (1.0 / t).sqrt();
    let b = rt * (t * z - 1.0);
    let a = -rt * (t * z + 1.0);
    let tail = std_normal_cdf(a);
    let second = if tail == 0.0 { 0.0 } else { (2.0 * z).exp() * tail };
    std_normal_cdf(b) + second
}

/// Inverse Gaussian `IG(1/z, 1)` truncated to `(0, t)`.
fn truncated_inv_gauss<R: Rng + ?Sized>(z: f64, t: f64, rng: &mut R) -> f64 {
    let mu = if z > 0.0 { 1.0 / z } else { f64::INFINITY };
    if mu > t {
        loop {
            // 1 / truncated chi-square(1) on (1/t, ∞)
            let x = loop {
                let e1: f64 = rng.sample(Exp1);
                let e2: f64 = rng.sample(Exp1);
                if e1 * e1 <= 2.0 * e2 / t {
                    let d = 1.0 + t * e1;
                    break t / (d * d);
                }
            };
            let alpha = (-0.5 * z * z * x).exp();
            let u: f64 = rng.random();
            if u <= alpha {
                return x;
            }
        }
    } else {
        loop {
            let ysq = {
                let y: f64 = StandardNormal.sample(rng);
                y * y
            };
            let mut x = mu + 0.5 * mu * mu * ysq - 0.5 * mu * (4.0 * mu * ysq + (mu * ysq).powi(2)).sqrt();
            let u: f64 = rng.random();
            if u > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x < t {
                return x;
            }
        }
    }
}

/// Draws from `J*(1, z)` with `z ≥ 0`. Returns the draw and the number of
/// proposals used.
fn sample_jstar<R: Rng + ?Sized>(z: f64, rng: &mut R) -> (f64, usize) {
    let k = PI * PI / 8.0 + 0.5 * z * z;
    let p = 0.5 * PI * (-k * TRUNC).exp() / k;
    let q = 2.0 * (-z).exp() * inv_gauss_cdf(TRUNC, z);
    let mix = p / (p + q);
    for attempt in 1..=MAX_PROPOSALS {
        let u: f64 = rng.random();
        let x = if u < mix {
            let e: f64 = rng.sample(Exp1);
            TRUNC + e / k
        } else {
            truncated_inv_gauss(z, TRUNC, rng)
        };
        let mut s = series_coef(0, x);
        let v: f64 = rng.random();
        let y = v * s;
        let mut n = 0;
        loop {
            n += 1;
            if n % 2 == 1 {
                s -= series_coef(n, x);
                if y <= s {
                    return (x, attempt);
                }
            } else {
                s += series_coef(n, x);
                if y > s {
                    break;
                }
            }
        }
    }
    panic!("PG(1, {}) sampler exceeded {MAX_PROPOSALS} proposals", 2.0 * z)
}

/// One exact draw from `PG(1, c)`.
pub fn sample_pg1<R: Rng + ?Sized>(c: f64, rng: &mut R) -> f64 {
    debug_assert!(c.is_finite(), "PG tilt must be finite");
    0.25 * sample_jstar(0.5 * c.abs(), rng).0
}

/// Like [`sample_pg1`] but also reports how many proposals were needed.
pub fn sample_pg1_counted<R: Rng + ?Sized>(c: f64, rng: &mut R) -> (f64, usize) {
    let (x, n) = sample_jstar(0.5 * c.abs(), rng);
    (0.25 * x, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_and_se(draws: &[f64]) -> (f64, f64) {
        let n = draws.len() as f64;
        let m = draws.iter().sum::<f64>() / n;
        let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn mean_identity_values() {
        assert_eq!(pg1_mean(0.0), 0.25);
        assert!((pg1_mean(1e-6) - 0.25).abs() < 1e-12);
        // tanh(1)/4
        assert!((pg1_mean(2.0) - 0.190399).abs() < 1e-6);
        assert!((pg1_mean(2.0) - 1f64.tanh() / 4.0).abs() < 1e-15);
        assert_eq!(pg1_mean(-3.0), pg1_mean(3.0));
    }

    #[test]
    fn variance_is_continuous_at_zero() {
        assert!((pg1_variance(0.0) - 1.0 / 24.0).abs() < 1e-15);
        // reference values from 40-digit arithmetic
        for (c, v) in [
            (1e-3, 0.041666658333334598),
            (0.5, 0.039659800808458561),
            (0.999999, 0.034446657870708718),
            (1.000001, 0.034446632906331732),
            (3.0, 0.011742375838136919),
        ] {
            assert!((pg1_variance(c) - v).abs() < 1e-15 * v / 1e-2, "{c}");
        }
    }

    #[test]
    fn draws_match_mean_at_zero_and_two() {
        let mut rng = RngStream::new(11, 0);
        for &c in &[0.0, 2.0] {
            let draws: Vec<f64> = (0..100_000).map(|_| sample_pg1(c, &mut rng)).collect();
            assert!(draws.iter().all(|&d| d > 0.0));
            let (m, se) = mean_and_se(&draws);
            assert!((m - pg1_mean(c)).abs() < 3.0 * se, "c={c}: mean {m} vs {}", pg1_mean(c));
        }
    }

    #[test]
    fn variance_at_zero() {
        let mut rng = RngStream::new(5, 1);
        let draws: Vec<f64> = (0..100_000).map(|_| sample_pg1(0.0, &mut rng)).collect();
        let n = draws.len() as f64;
        let (m, _) = mean_and_se(&draws);
        let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1.0);
        // se of sample variance ≈ sqrt((m4 - v²)/n)
        let m4 = draws.iter().map(|d| (d - m).powi(4)).sum::<f64>() / n;
        let se = ((m4 - v * v) / n).sqrt();
        assert!((v - 1.0 / 24.0).abs() < 3.0 * se, "var {v}");
    }

    #[test]
    fn sign_of_tilt_does_not_matter() {
        let mut a = RngStream::new(3, 0);
        let mut b = RngStream::new(3, 0);
        for _ in 0..100 {
            assert_eq!(sample_pg1(1.7, &mut a), sample_pg1(-1.7, &mut b));
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        let mut c = RngStream::new(42, 8);
        let va: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let vb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let vc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(va, vb);
        assert_ne!(va, vc);
    }
}
