//! Simulated logistic-regression datasets with AR(1)-correlated Gaussian
//! covariates and block-structured true coefficients.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::glm::{logistic, Dataset, ModelIndicator};
use crate::pg::RngStream;

/// Building block of the true coefficient vectors.
pub const BLOCK: [f64; 5] = [2.0, -1.0, -1.0, 0.5, -0.5];
pub const TRUE_INTERCEPT: f64 = -0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n: usize,
    pub p: usize,
    pub p_true: usize,
    pub r: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if ![0, 5, 10, 20].contains(&self.p_true) {
            return arg_err(format!("p_true must be one of 0, 5, 10, 20 (got {})", self.p_true));
        }
        if self.p < self.p_true.max(1) {
            return arg_err(format!("p = {} is smaller than p_true = {}", self.p, self.p_true));
        }
        if !(0.0..1.0).contains(&self.r) {
            return arg_err("r must lie in [0, 1)");
        }
        if self.n <= self.p + 1 {
            return arg_err("n must exceed p + 1");
        }
        Ok(())
    }

    /// Generates the dataset and the dense true coefficient vector.
    ///
    /// The design and the response use separate streams of `seed`, so the
    /// same design is shared by scenarios that differ only in `p_true`.
    pub fn generate(&self) -> Result<(Dataset, DVector<f64>)> {
        self.validate()?;
        let beta = true_coefficients(self.p_true, self.p)?;
        let x = gen_design(self.n, self.p, self.r, &mut RngStream::new(self.seed, 0))?;
        let y = gen_response(&x, &beta, &mut RngStream::new(self.seed, 1))?;
        let names = (1..=self.p).map(|j| format!("x{j}")).collect();
        let covariates = x.columns(1, self.p).into_owned();
        Ok((Dataset::new(y, covariates, names)?, beta))
    }

    pub fn true_model(&self) -> Result<ModelIndicator> {
        let beta = true_coefficients(self.p_true, self.p)?;
        let cov: Vec<usize> = (1..=self.p).filter(|&j| beta[j] != 0.0).collect();
        ModelIndicator::from_covariates(self.p, &cov)
    }
}

/// Dense `p+1` coefficient vector: intercept −0.5, then the block pattern
/// for `p_true` active covariates, zeros elsewhere.
pub fn true_coefficients(p_true: usize, p: usize) -> Result<DVector<f64>> {
    let blocks: &[f64] = match p_true {
        0 => &[],
        5 => &[1.0],
        10 => &[1.0, 1.0],
        20 => &[1.0, 0.5, 1.0, 0.5],
        _ => return arg_err(format!("p_true must be one of 0, 5, 10, 20 (got {p_true})")),
    };
    if p < p_true {
        return arg_err(format!("p = {p} is smaller than p_true = {p_true}"));
    }
    let mut beta = DVector::zeros(p + 1);
    beta[0] = TRUE_INTERCEPT;
    for (k, scale) in blocks.iter().enumerate() {
        for (i, b) in BLOCK.iter().enumerate() {
            beta[1 + 5 * k + i] = scale * b;
        }
    }
    Ok(beta)
}

/// `n × (p+1)` design with an intercept column and rows i.i.d.
/// `N(0, R)`, `R_jk = r^{|j−k|}`, built by the AR(1) recursion.
pub fn gen_design<R: Rng + ?Sized>(n: usize, p: usize, r: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&r) {
        return arg_err("r must lie in [0, 1)");
    }
    let s = (1.0 - r * r).sqrt();
    let mut x = DMatrix::from_element(n, p + 1, 1.0);
    for i in 0..n {
        let mut prev = 0.0;
        for j in 1..=p {
            let e: f64 = StandardNormal.sample(rng);
            let v = if j == 1 { e } else { r * prev + s * e };
            x[(i, j)] = v;
            prev = v;
        }
    }
    Ok(x)
}

/// `yᵢ ~ Bernoulli(logistic(xᵢᵀβ))`.
pub fn gen_response<R: Rng + ?Sized>(x: &DMatrix<f64>, beta: &DVector<f64>, rng: &mut R) -> Result<Vec<f64>> {
    if x.ncols() != beta.len() {
        return arg_err("design and coefficient dimensions differ");
    }
    let eta = x * beta;
    Ok(eta
        .iter()
        .map(|&e| if Bernoulli::new(logistic(e)).expect("probability").sample(rng) { 1.0 } else { 0.0 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_layouts() {
        let b0 = true_coefficients(0, 20).unwrap();
        assert_eq!(b0[0], -0.5);
        assert!(b0.iter().skip(1).all(|&v| v == 0.0));
        let b5 = true_coefficients(5, 20).unwrap();
        assert_eq!(b5.rows(1, 5).as_slice(), &BLOCK);
        assert!(b5.iter().skip(6).all(|&v| v == 0.0));
        let b10 = true_coefficients(10, 20).unwrap();
        assert_eq!(b10.rows(6, 5).as_slice(), &BLOCK);
        let b20 = true_coefficients(20, 20).unwrap();
        assert_eq!(b20.rows(6, 5).as_slice(), &[1.0, -0.5, -0.5, 0.25, -0.25]);
        assert_eq!(b20.rows(11, 5).as_slice(), &BLOCK);
        assert_eq!(b20.rows(16, 5).as_slice(), &[1.0, -0.5, -0.5, 0.25, -0.25]);
        assert!(true_coefficients(7, 20).is_err());
        assert!(true_coefficients(20, 10).is_err());
    }

    #[test]
    fn zero_coefficients_give_balanced_response() {
        let mut rng = RngStream::new(3, 0);
        let n = 20_000;
        let x = gen_design(n, 2, 0.0, &mut rng).unwrap();
        let y = gen_response(&x, &DVector::zeros(3), &mut rng).unwrap();
        let mean = y.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn scenario_is_deterministic() {
        let sc = Scenario { n: 50, p: 6, p_true: 5, r: 0.75, seed: 9 };
        let (a, ba) = sc.generate().unwrap();
        let (b, bb) = sc.generate().unwrap();
        assert_eq!(a.x(), b.x());
        assert_eq!(a.y(), b.y());
        assert_eq!(ba, bb);
        assert_eq!(sc.true_model().unwrap().bit_string(), "111110");
    }
}
