use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sublinear"));
    c.env_remove("OUTPUT_DIR");
    c
}

fn run_with(dir: &Path, sub: &str, config: &Value) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    bin().arg(sub).arg("--config").arg(&path).output().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn example(dir: &Path, n: usize) -> Value {
    json!({
        "problem": {"bc": "dirichlet", "geometry": {"line": {"lo": 0.0, "hi": PI}}, "n_interior": n},
        "weight": {"example_cos": {"q": 0.5}},
        "q": 0.5,
        "output": {"dir": dir.join("out")}
    })
}

/// Nodal table of `f` on the uniform grid of `[0, π]`.
fn table(n: usize, f: impl Fn(f64) -> f64) -> Value {
    let h = PI / (n + 1) as f64;
    let values: Vec<f64> = (0..n + 2).map(|i| f(i as f64 * h)).collect();
    json!({"table": {"values": values}})
}

#[test]
fn solve_example_is_positive_not_strong() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(dir.path(), "solve", &example(dir.path(), 511));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("out/report.json"));
    assert_eq!(report["classification"], "positive_not_strong");
    assert_eq!(report["converged"], true);
    assert!(report["residual_inf"].as_f64().unwrap() < 1e-9);
    assert_eq!(report["a_priori"]["holds"], true);
    let a0 = report["conditions"]["a0"]["value"].as_f64().unwrap();
    assert!((a0 + 2.0 * PI).abs() < 1e-3);
    let csv = std::fs::read_to_string(dir.path().join("out/solution.csv")).unwrap();
    assert!(csv.starts_with("x,u,a,residual\n"));
    assert_eq!(csv.lines().count(), 514);
}

#[test]
fn solve_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example(dir.path(), 127);
    assert_eq!(run_with(dir.path(), "solve", &cfg).status.code(), Some(0));
    let first = std::fs::read(dir.path().join("out/solution.csv")).unwrap();
    let report = std::fs::read(dir.path().join("out/report.json")).unwrap();
    assert_eq!(run_with(dir.path(), "solve", &cfg).status.code(), Some(0));
    assert_eq!(first, std::fs::read(dir.path().join("out/solution.csv")).unwrap());
    assert_eq!(report, std::fs::read(dir.path().join("out/report.json")).unwrap());
}

#[test]
fn negative_weight_gives_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = example(dir.path(), 63);
    cfg["weight"] = table(63, |x| -1.0 - x);
    let out = run_with(dir.path(), "solve", &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("out/report.json"));
    assert_eq!(report["classification"], "trivial");
    assert_eq!(report["norm_inf"], 0.0);
}

#[test]
fn malformed_and_invalid_configs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"problem\": ").unwrap();
    let out = bin().args(["solve", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let mut cfg = example(dir.path(), 63);
    cfg["q"] = json!(1.2);
    assert_eq!(run_with(dir.path(), "solve", &cfg).status.code(), Some(1));

    let missing = bin().args(["solve", "--config"]).arg(dir.path().join("nope.json")).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn sweep_reports_q_hat_and_rejects_empty_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = example(dir.path(), 255);
    cfg["q_grid"] = json!([0.3, 0.4, 0.6, 0.7, 0.8]);
    let out = run_with(dir.path(), "sweep", &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&dir.path().join("out/sweep.json"));
    assert!(summary["q_hat"].as_f64().unwrap() >= 0.5);
    assert_eq!(summary["interval_ok"], true);
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert!(csv.starts_with("q,norm_inf,min_u,energy,gamma1,classification\n"));

    cfg["q_grid"] = json!([]);
    assert_eq!(run_with(dir.path(), "sweep", &cfg).status.code(), Some(1));
}

#[test]
fn branch_sweep_with_large_mu_goes_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let n = 127;
    let cfg = json!({
        "problem": {"bc": "neumann", "geometry": {"line": {"lo": 0.0, "hi": PI}}, "n_interior": n},
        "weight": table(n, |x| 0.5 * (x.cos() - 0.3)),
        "q_grid": [0.8, 0.9, 0.95],
        "branch": true,
        "output": {"dir": dir.path().join("out")}
    });
    let out = run_with(dir.path(), "sweep", &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&dir.path().join("out/sweep.json"));
    assert_eq!(summary["regime"], "to_zero");
    assert!(summary["mu"].as_f64().unwrap() > 1.0);
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert!(csv.lines().next().unwrap().ends_with(",scaled_distance"));
}

#[test]
fn conditions_report_and_missing_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = example(dir.path(), 255);
    assert_eq!(run_with(dir.path(), "conditions", &cfg).status.code(), Some(0));
    let report = read_json(&dir.path().join("out/conditions.json"));
    assert_eq!(report["a0"]["holds"], true);
    assert!((report["a0"]["value"].as_f64().unwrap() + 2.0 * PI).abs() < 1e-3);

    cfg.as_object_mut().unwrap().remove("q");
    cfg["explicit"] = json!(true);
    assert_eq!(run_with(dir.path(), "conditions", &cfg).status.code(), Some(1));
}

#[test]
fn radial_inferno_weight_holds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "problem": {"bc": "dirichlet", "geometry": {"radial": {"radius": 1.0, "dim": 3}}, "n_interior": 255},
        "weight": {"radial_piecewise": {
            "a_plus": {"peak": 1.0, "power": 0.0},
            "a_minus": {"peak": 0.2, "power": 0.0},
            "r0": 0.5, "radius": 1.0, "layout": "positive_core"}},
        "q": 0.5,
        "explicit": true,
        "output": {"dir": dir.path().join("out")}
    });
    let out = run_with(dir.path(), "conditions", &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("out/conditions.json"));
    assert_eq!(report["inferno"]["holds"], true);
}

#[test]
fn eigen_and_poisson_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = example(dir.path(), 255);
    cfg["weight"] = table(255, |_| 1.0);
    assert_eq!(run_with(dir.path(), "eigen", &cfg).status.code(), Some(0));
    let eig = read_json(&dir.path().join("out/eigen.json"));
    assert!((eig["mu"].as_f64().unwrap() - 1.0).abs() < 1e-4);

    cfg["weight"] = json!({"example_cos": {"q": 0.5}});
    assert_eq!(run_with(dir.path(), "poisson", &cfg).status.code(), Some(0));
    let s = read_json(&dir.path().join("out/poisson.json"));
    assert!(s["max_interior"].as_f64().unwrap() < 0.0);
    assert!(std::fs::read_to_string(dir.path().join("out/poisson.csv")).unwrap().starts_with("x,a,s\n"));

    cfg["problem"]["bc"] = json!("neumann");
    assert_eq!(run_with(dir.path(), "poisson", &cfg).status.code(), Some(1));
}

#[test]
fn deadcore_delta_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "problem": {"bc": "dirichlet", "geometry": {"line": {"lo": 0.0, "hi": PI}}, "n_interior": 255},
        "weight": {"delta_family": {
            "b1": [{"center": 1.5707963267948966, "half_width": 0.5, "height": 1.0}],
            "b2": [{"center": 0.5, "half_width": 0.45, "height": 1.0},
                   {"center": 2.641592653589793, "half_width": 0.45, "height": 1.0}],
            "delta": 50.0}},
        "q": 0.1,
        "deadcore": {"deltas": [0.0, 50.0], "rho": 0.25},
        "output": {"dir": dir.path().join("out")}
    });
    let out = run_with(dir.path(), "deadcore", &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&dir.path().join("out/deadcore.json"));
    assert_eq!(summary["delta_first_deadcore"], 50.0);
    let csv = std::fs::read_to_string(dir.path().join("out/deadcore.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn output_dir_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example(dir.path(), 63);
    let path = dir.path().join("config.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let target = dir.path().join("elsewhere");
    let out = bin()
        .env("OUTPUT_DIR", &target)
        .args(["eigen", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("eigen.json").exists());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn verify_list_and_corrupted_threshold() {
    let out = bin().args(["verify", "--list"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.contains("sweep determinism"));

    let out = bin().args(["verify", "--only", "1,3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    let out = bin()
        .args(["verify", "--only", "1,3", "--corrupt-threshold", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("[FAIL]  3 eigenpair oracle"));
    assert!(stdout.contains("[PASS]  1"));
    assert!(String::from_utf8(out.stderr).unwrap().contains("eigenpair oracle"));
}
