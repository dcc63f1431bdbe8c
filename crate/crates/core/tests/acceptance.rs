//! Acceptance criteria, one line each. Runs without the libtest harness so
//! every line is printed; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use lpep::glm::{
    fit_mle_design, log_likelihood_design, score_and_information_design, Dataset, ModelIndicator,
};
use lpep::inference::summarize;
use lpep::io::{load_csv, replicate, standardize_columns, ResponseColumn};
use lpep::oracle::exact_model_posterior;
use lpep::pg::{pg1_mean, pg1_variance, sample_pg1};
use lpep::priors::{lpep_marginal_logpdf, DeltaPrior, DeltaPriorKind, ImaginarySample, ModelPrior};
use lpep::sampler::{marginal_logpost_gamma_delta, reflective_normal_logpdf, run_chain, McmcConfig};
use lpep::simgen::{gen_design, Scenario};
use lpep::RngStream;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn bits(p: usize, s: &str) -> ModelIndicator {
    assert_eq!(s.len(), p);
    ModelIndicator::from_bit_string(s).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let data = load_csv(&fixture_path("tiny8.csv"), None, false).unwrap();
    let exact = exact_model_posterior(&data, &DeltaPrior::fixed(8), 32).unwrap();
    let cfg = McmcConfig::for_data(&data, DeltaPriorKind::FixedUnitInfo).with_iterations(5_000, 100_000).with_seed(1);
    let store = run_chain(&data, &cfg, &mut RngStream::new(1, 0)).unwrap();
    let s = summarize(&store).unwrap();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (m, p) in &exact.model_posteriors {
        let est = s.model_probability(m);
        worst = worst.max((est - p).abs());
        parts.push(format!("{m} {est:.4}/{p:.4}"));
    }
    outcome(worst <= 0.02, format!("max |mcmc-oracle| = {worst:.4} (tol 0.02); {}", parts.join(", ")))
}

fn urinary_replication() -> Outcome {
    let path = fixture_path("urinary.csv");
    if !path.exists() {
        return outcome(false, format!("urinary fixture not available at {}", path.display()));
    }
    let data = load_csv(&path, None, false).unwrap();
    let cfg = McmcConfig::for_data(&data, DeltaPriorKind::FixedUnitInfo).with_iterations(10_000, 10_000).with_seed(1);
    let s = summarize(&run_chain(&data, &cfg, &mut RngStream::new(1, 0)).unwrap()).unwrap();
    let targets = [("111", 0.69), ("011", 0.22), ("010", 0.06), ("110", 0.03)];
    let coef = [0.56, -0.70, -0.39, 0.15];
    let mut pass = true;
    let mut parts = Vec::new();
    for (b, t) in targets {
        let est = s.model_probability(&bits(3, b));
        pass &= (est - t).abs() <= 0.05;
        parts.push(format!("({b}) {est:.3}/{t}"));
    }
    for (j, t) in coef.iter().enumerate() {
        pass &= (s.bma_mean[j] - t).abs() <= 0.15;
        parts.push(format!("b{j} {:.3}/{t}", s.bma_mean[j]));
    }
    outcome(pass, parts.join(", "))
}

fn endometrial_replication() -> Outcome {
    let data = load_csv(&fixture_path("endometrial.csv"), Some(&ResponseColumn::parse("HG")), false).unwrap();
    let cfg = McmcConfig::for_data(&data, DeltaPriorKind::FixedUnitInfo).with_iterations(10_000, 50_000).with_seed(1);
    let s = summarize(&run_chain(&data, &cfg, &mut RngStream::new(1, 0)).unwrap()).unwrap();
    let a = s.model_probability(&bits(3, "101"));
    let b = s.model_probability(&bits(3, "111"));
    let pass = (a - 0.55).abs() <= 0.07 && (b - 0.42).abs() <= 0.07;
    outcome(pass, format!("P(1,0,1) = {a:.3} (0.55±0.07), P(1,1,1) = {b:.3} (0.42±0.07)"))
}

fn null_scenario_simulation() -> Outcome {
    let scenario = Scenario { n: 500, p: 20, p_true: 0, r: 0.0, seed: 2024 };
    let (data, _) = scenario.generate().unwrap();
    let mcmc = McmcConfig::for_data(&data, DeltaPriorKind::FixedUnitInfo).with_iterations(2_000, 30_000).with_seed(2024);
    let rows = replicate(&scenario, 10, &mcmc).unwrap();
    let hits = rows.iter().filter(|r| r.map_match).count();
    let mean = |f: fn(&lpep::io::ReplicationMetrics) -> f64| rows.iter().map(f).sum::<f64>() / rows.len() as f64;
    let amse_cov = mean(|r| r.amse);
    let amse_int = mean(|r| r.amse_with_intercept);
    let target = 5.3e-4;
    let ratio = amse_int / target;
    let pass = hits >= 8 && (0.5..=2.0).contains(&ratio);
    outcome(
        pass,
        format!(
            "MAP = null in {hits}/10 (need 8); AMSE incl. intercept {amse_int:.3e} (target 5.3e-4, ratio {ratio:.2}); covariate-only AMSE {amse_cov:.3e}"
        ),
    )
}

fn pg_moments() -> Outcome {
    let mut rng = RngStream::new(5, 0);
    let n = 100_000;
    let mut pass = true;
    let mut parts = Vec::new();
    for c in [0.0, 1.0, 2.5] {
        let mean = (0..n).map(|_| sample_pg1(c, &mut rng)).sum::<f64>() / n as f64;
        let target = if c == 0.0 { 0.25 } else { (c / 2.0f64).tanh() / (2.0 * c) };
        let se = (pg1_variance(c) / n as f64).sqrt();
        let z = (mean - target) / se;
        pass &= z.abs() <= 3.0 && (pg1_mean(c) - target).abs() < 1e-15;
        parts.push(format!("c={c}: z={z:+.2}"));
    }
    outcome(pass, parts.join(", "))
}

fn numerics_suite() -> Outcome {
    let mut rng = RngStream::new(6, 0);

    // (a) score and information by central differences
    let mut worst_a = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(5..40);
        let p = rng.random_range(1..4);
        let x = DMatrix::from_fn(n, p + 1, |_, j| if j == 0 { 1.0 } else { StandardNormal.sample(&mut rng) });
        let y = DVector::from_fn(n, |_, _| if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 });
        let beta = DVector::from_fn(p + 1, |_, _| 2.0 * rng.random::<f64>() - 1.0);
        let (score, info) = score_and_information_design(&x, &y, &beta).unwrap();
        let ll = |b: &DVector<f64>| log_likelihood_design(&x, &y, b).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
        for j in 0..=p {
            let h = 1e-5;
            let mut up = beta.clone();
            let mut dn = beta.clone();
            up[j] += h;
            dn[j] -= h;
            worst_a = worst_a.max(rel((ll(&up) - ll(&dn)) / (2.0 * h), score[j]));
            for k in 0..=p {
                let h = 1e-4;
                let at = |dj: f64, dk: f64| {
                    let mut b = beta.clone();
                    b[j] += dj;
                    b[k] += dk;
                    ll(&b)
                };
                let fd = -(at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
                worst_a = worst_a.max(rel(fd, info[(j, k)]));
            }
        }
    }

    // (b) Woodbury against the dense n×n Gaussian
    let mut worst_b = 0.0f64;
    let mut done = 0;
    while done < 50 {
        let n = rng.random_range(6..=12);
        let p = rng.random_range(1..=3);
        let cov = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let yobs: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let Ok(data) = Dataset::new(yobs, cov, (1..=p).map(|j| format!("x{j}")).collect()) else { continue };
        let ystar = DVector::from_fn(n, |_, _| if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 });
        let model = ModelIndicator::from_mask(p, rng.random_range(0..(1u64 << p)));
        let xg = data.design_for(&model);
        let Ok(fit) = fit_mle_design(&xg, &ystar, None) else { continue };
        if !fit.converged || fit.beta_hat.amax() > 20.0 {
            continue;
        }
        let omega = DVector::from_fn(n, |_, _| sample_pg1(3.0 * rng.random::<f64>(), &mut rng));
        let delta = rng.random_range(0.5..50.0);
        let (mp, dp) = (ModelPrior::default(), DeltaPrior::new(DeltaPriorKind::HyperGOverN, n).unwrap());
        let got = marginal_logpost_gamma_delta(&data, &omega, &model, delta, &fit, &dp, &mp).unwrap();
        let mut v = &xg * fit.info.clone().try_inverse().unwrap() * xg.transpose() * delta;
        for i in 0..n {
            v[(i, i)] += 1.0 / omega[i];
        }
        let r = DVector::from_fn(n, |i, _| (data.y()[i] - 0.5) / omega[i]) - &xg * &fit.beta_hat;
        let dense = -0.5
            * (n as f64 * (2.0 * PI).ln() + v.determinant().ln() + r.dot(&(v.clone().try_inverse().unwrap() * &r)))
            + mp.log_prior(&model)
            + dp.log_prior(delta, &model);
        let err = (got - dense).abs();
        worst_b = if err.is_finite() { worst_b.max(err) } else { f64::INFINITY };
        done += 1;
    }

    // (c) XᵀΩz = Xᵀ(y − ½)
    let n = 200;
    let x = DMatrix::from_fn(n, 5, |_, j| if j == 0 { 1.0 } else { StandardNormal.sample(&mut rng) });
    let y = DVector::from_fn(n, |_, _| if rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 });
    let omega = DVector::from_fn(n, |_, _| sample_pg1(0.8, &mut rng));
    let z = DVector::from_fn(n, |i, _| (y[i] - 0.5) / omega[i]);
    let worst_c = (x.tr_mul(&omega.component_mul(&z)) - x.tr_mul(&y.map(|v| v - 0.5))).amax();

    // (d) reflective proposal density integrates to one
    let (a, cur, tau) = (4.5, 10.0, 10.5);
    let nodes = 400_000;
    let h = (cur + 20.0 * tau - a) / nodes as f64;
    let total: f64 = (0..nodes)
        .map(|k| reflective_normal_logpdf(a + (k as f64 + 0.5) * h, cur, a, tau).unwrap().exp() * h)
        .sum();
    let worst_d = (total - 1.0).abs();

    let pass = worst_a <= 1e-5 && worst_b <= 1e-8 && worst_c <= 1e-12 && worst_d <= 1e-6;
    outcome(
        pass,
        format!(
            "(a) fd rel err {worst_a:.1e} (1e-5), (b) woodbury {worst_b:.1e} (1e-8), (c) identity {worst_c:.1e}, (d) normalization {worst_d:.1e} (1e-6)"
        ),
    )
}

fn tail_check() -> Outcome {
    let n = 30;
    let p = 3;
    let mut rng = RngStream::new(3, 0);
    let cov = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
    let yobs: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
    let data = Dataset::new(yobs, cov, (1..=p).map(|j| format!("x{j}")).collect()).unwrap();
    let ys = loop {
        let mut v: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { 0.0 }).collect();
        v.shuffle(&mut rng);
        let s = ImaginarySample::evaluate(DVector::from_vec(v), &data).unwrap();
        if s.admissible {
            break s;
        }
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, kind) in [("hyper-g/n", DeltaPriorKind::HyperGOverN), ("robust", DeltaPriorKind::Robust)] {
        let pr = DeltaPrior::new(kind, n).unwrap();
        let mut slopes = Vec::new();
        for k in 0..=p {
            let m = ModelIndicator::from_covariates(p, &(1..=k).collect::<Vec<_>>()).unwrap();
            let v = DVector::from_fn(k + 1, |j, _| if j % 2 == 0 { 1.0 } else { -1.0 }).normalize();
            let f = |r: f64| lpep_marginal_logpdf(&(&v * r), &ys, &m, &pr, &data).unwrap();
            let (s, h) = (200.0, 0.05);
            let slope = (f(s * (1.0 + h)) - f(s * (1.0 - h))) / ((1.0 + h).ln() - (1.0 - h).ln());
            pass &= (slope + (k as f64 + 2.0)).abs() <= 0.1;
            slopes.push(format!("{slope:.2}/{}", -(k as f64 + 2.0)));
        }
        parts.push(format!("{label} [{}]", slopes.join(" ")));
    }
    outcome(pass, parts.join("; "))
}

fn intrinsic_limit() -> Outcome {
    let n = 5000;
    let p = 3;
    let mut rng = RngStream::new(8, 0);
    let mut x = gen_design(n, p, 0.0, &mut rng).unwrap();
    let mut cov = x.columns(1, p).into_owned();
    standardize_columns(&mut cov).unwrap();
    x.columns_mut(1, p).copy_from(&cov);
    let mut v: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { 0.0 }).collect();
    v.shuffle(&mut RngStream::new(8, 1));
    let fit = fit_mle_design(&x, &DVector::from_vec(v), None).unwrap();
    let sup = fit.beta_hat.amax();
    let limit = x.tr_mul(&x) / (4.0 * n as f64);
    let rel = (&fit.info / n as f64 - &limit).norm() / limit.norm();
    outcome(
        fit.converged && sup <= 0.05 && rel <= 0.05,
        format!("‖β̂‖∞ = {sup:.4} (≤ 0.05), rel. Frobenius error of H/n = {rel:.2e} (≤ 0.05)"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("urinary replication", urinary_replication),
        ("endometrial replication", endometrial_replication),
        ("null-scenario simulation", null_scenario_simulation),
        ("Polya-Gamma moments", pg_moments),
        ("numerics suite", numerics_suite),
        ("tail slopes", tail_check),
        ("intrinsic limit", intrinsic_limit),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let label = format!("criterion {} {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{label}: {verdict} ({:.1}s) {}", t.elapsed().as_secs_f64(), o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    }
}
