use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn lpep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpep")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn simulate(dir: &Path) -> PathBuf {
    let out = dir.join("sim.csv");
    let o = lpep(&["simulate", "--scenario", "sparse", "--n", "80", "--p", "6", "--seed", "3", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn simulate_then_fit_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = lpep(&[
            "fit", csv.to_str().unwrap(), "--iterations", "2000", "--burn-in", "500", "--chains", "2", "--seed", "11",
            "-o", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let a = run("a.json");
    assert_eq!(a, run("b.json"));
    let json: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(json["pips"].as_array().unwrap().len(), 6);
    assert!(json["pips"].as_array().unwrap().iter().all(|p| (0.0..=1.0).contains(&p.as_f64().unwrap())));
}

#[test]
fn oracle_output_is_a_distribution() {
    let o = lpep(&["oracle", &fixture("tiny8.csv"), "--quad-order", "8"]);
    assert!(o.status.success());
    let json: Value = serde_json::from_slice(&o.stdout).unwrap();
    let models = json["models"].as_array().unwrap();
    assert_eq!(models.len(), 4);
    let total: f64 = models.iter().map(|m| m["prob"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn check_separation_reports_a_witness() {
    let o = lpep(&["check-separation", &fixture("endometrial.csv"), "--response", "HG"]);
    assert!(o.status.success());
    let json: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["separated"], Value::Bool(true));
    // NV alone separates high-grade cases
    assert_eq!(json["witness_direction"][1].as_f64(), Some(1.0));
}

#[test]
fn replicate_writes_one_row_per_replication() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let o = lpep(&[
        "replicate", "--scenario", "null", "--n", "60", "--p", "3", "--reps", "3", "--seed", "1", "--iterations", "600",
        "--burn-in", "100", "-o", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("rep,map_match,f1,model_size,amse,amse_with_intercept"));
}

#[test]
fn failures_map_to_documented_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "y,x1\n0,1.0\n2,0.5\n1,0.2\n").unwrap();

    let cases: [(&[&str], i32); 5] = [
        (&["fit", "/definitely/missing.csv"], 3),
        (&["fit", bad.to_str().unwrap()], 3),
        (&["fit", bad.to_str().unwrap(), "--delta", "nope"], 2),
        (&["replicate", "--scenario", "null"], 2),
        (&["simulate", "--scenario", "sparse", "--p", "4"], 2),
    ];
    for (args, code) in cases {
        let o = lpep(args);
        assert_eq!(o.status.code(), Some(code), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with(&format!("lpep-error code={code} ")), "{err}");
    }
    assert_eq!(lpep(&["--help"]).status.code(), Some(0));
}
