// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64 as C;
use stieltjes::oracle;

const ONE_JUMP: &str = r#""derivator": {"T": 3, "pieces": [{"from": 0, "to": 3, "density": {"kind": "const", "value": 1}}], "jumps": [{"t": 1, "d": 0.5}]}"#;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn stieltjes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stieltjes")).args(args).output().expect("run stieltjes")
}

fn run_config(body: &str, args: &[&str]) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", body);
    let mut all = args.to_vec();
    all.extend(["--config", cfg.to_str().unwrap()]);
    stieltjes(&all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn max_residual(text: &str) -> f64 {
    data_rows(text).iter().map(|r| r.last().unwrap().parse::<f64>().unwrap()).fold(0.0, f64::max)
}

#[test]
fn integrate_constant_one() {
    let out = run_config(&format!("{{{ONE_JUMP}, \"f\": 1}}"), &["integrate", "--grid-n", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = data_rows(&stdout(&out));
    let last = rows.last().unwrap();
    assert_eq!(last[0], "3");
    assert!((last[1].parse::<f64>().unwrap() - 3.5).abs() < 1e-12);
}

#[test]
fn malformed_json_is_a_config_error() {
    let out = run_config("{\"derivator\": ", &["integrate"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_config(&format!("{{{ONE_JUMP}, \"f\": 1, \"bogus\": 2}}"), &["integrate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn small_grid_is_rejected() {
    let out = run_config(&format!("{{{ONE_JUMP}, \"f\": 1}}"), &["integrate", "--grid-n", "8"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_finite_integrand_names_the_abscissa() {
    let out = run_config(&format!("{{{ONE_JUMP}, \"f\": {{\"kind\": \"expr\", \"re\": \"ln(t - 1)\"}}}}"), &["integrate"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t = "));
}

#[test]
fn classical_cosine() {
    let cfg = r#"{"derivator": {"T": 3.141592653589793, "pieces": [{"from": 0, "to": 3.141592653589793, "density": {"kind": "const", "value": 1}}]},
                  "problem": {"P": {"kind": "const", "value": 0}, "Q": {"kind": "const", "value": 1}, "x0": [1, 0], "v0": [0, 0]}}"#;
    let out = run_config(cfg, &["solve2", "--grid-n", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let last = data_rows(&stdout(&out)).pop().unwrap();
    assert!((last[1].parse::<f64>().unwrap() + 1.0).abs() < 1e-7);
}

#[test]
fn constant_coefficients_have_small_residual() {
    let cfg = format!(r#"{{{ONE_JUMP}, "problem": {{"P": 1.5, "Q": 0.5, "f": {{"kind": "expr", "re": "cos(t)"}}, "x0": 1, "v0": [0, 1]}}}}"#);
    let out = run_config(&cfg, &["solve2", "--grid-n", "128"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("# method=closed-form-distinct"));
    assert!(max_residual(&text) <= 1e-6);
}

#[test]
fn piecewise_coefficients_use_the_spliced_basis() {
    let cfg = format!(
        r#"{{{ONE_JUMP}, "problem": {{"P": {{"kind": "piecewise-const", "segments": [{{"until": 1, "value": 1}}, {{"until": 3, "value": 0.5}}]}}, "Q": 2, "f": 1, "x0": 1}}}}"#
    );
    let out = run_config(&cfg, &["solve2", "--grid-n", "64"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("# method=varpar"));
    assert!(max_residual(&stdout(&out)) <= 1e-6);
    // A break that is not a jump of g is refused.
    let cfg = cfg.replace(r#""until": 1,"#, r#""until": 2,"#);
    assert_eq!(run_config(&cfg, &["solve2"]).status.code(), Some(4));
}

#[test]
fn non_regressive_root_is_a_precondition_violation() {
    // Roots −1 and −2; 1 + (−2)(0.5) = 0 at the jump.
    let cfg = format!(r#"{{{ONE_JUMP}, "problem": {{"P": 3, "Q": 2, "x0": 1}}}}"#);
    assert_eq!(run_config(&cfg, &["solve2"]).status.code(), Some(4));
}

#[test]
fn wronskian_identities_hold_on_the_grid() {
    let cfg = format!(r#"{{{ONE_JUMP}, "problem": {{"P": 0.4, "Q": 1.3}}}}"#);
    let out = run_config(&cfg, &["wronskian", "--grid-n", "64"]);
    assert_eq!(out.status.code(), Some(0));
    for row in data_rows(&stdout(&out)) {
        assert!(row[5].parse::<f64>().unwrap() < 1e-10);
        assert!(row[6].parse::<f64>().unwrap() < 1e-10);
    }
}

#[test]
fn gexp_of_one_across_a_jump() {
    let out = run_config(&format!("{{{ONE_JUMP}, \"f\": 1}}"), &["gexp", "--grid-n", "32"]);
    assert_eq!(out.status.code(), Some(0));
    let last = data_rows(&stdout(&out)).pop().unwrap();
    let expected = 3f64.exp() * 1.5;
    assert!((last[1].parse::<f64>().unwrap() - expected).abs() < 1e-10 * expected);
}

#[test]
fn helmholtz_series_per_delta() {
    let out = stieltjes(&["helmholtz", "--delta", "0,0.2,0.5", "--grid-n", "120"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("# delta=")).count(), 3);
    let rows = data_rows(&text);
    let q = |s: f64| if s <= 1.0 { 1.0 } else { 4.0 };
    let mut worst = 0.0_f64;
    for row in rows.iter().filter(|r| r[0] == "0") {
        let t: f64 = row[1].parse().unwrap();
        let v: f64 = row[2].parse().unwrap();
        let reference = oracle::rk4_second_order(0.0, &q, &|_| C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0), t, 20_000, &[1.0]);
        worst = worst.max((v - reference.re).abs());
    }
    assert!(worst <= 1e-7, "{worst}");
    for delta in ["0.2", "0.5"] {
        assert!(rows.iter().any(|r| r[0] == delta));
    }
}

#[test]
fn helmholtz_json_output() {
    let out = stieltjes(&["helmholtz", "--delta", "0.2", "--grid-n", "16", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let series = v["series"].as_array().unwrap();
    assert_eq!(series.len(), 1);
    assert_eq!(series[0]["rows"][0]["v"], serde_json::json!([1.0, 0.0]));
}

#[test]
fn helmholtz_failures() {
    let out = run_config(r#"{"helmholtz": {"w1": 1, "w2": 0}}"#, &["helmholtz", "--delta", "0.2"]);
    assert_eq!(out.status.code(), Some(4));
    let out = stieltjes(&["helmholtz", "--delta", "0.2", "--out", "/nonexistent-dir/sub/out.csv"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn helmholtz_writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("series.csv");
    let out = stieltjes(&["helmholtz", "--delta", "0.1", "--grid-n", "16", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("# delta=0.1"));
}

#[test]
fn verify_levels() {
    let quick = stieltjes(&["verify"]);
    assert_eq!(quick.status.code(), Some(0));
    let full = stieltjes(&["verify", "--level", "full"]);
    assert_eq!(full.status.code(), Some(0));
    let rows = data_rows(&stdout(&full));
    assert!(rows.len() >= 12);
    assert!(rows.iter().all(|r| r[3] == "pass"));
    assert_eq!(stieltjes(&["verify", "--level", "slow"]).status.code(), Some(2));
}

#[test]
fn verify_detects_injected_fault() {
    let out = stieltjes(&["verify", "--inject", "c1-sign"]);
    assert_eq!(out.status.code(), Some(1));
    let failing: Vec<String> = data_rows(&stdout(&out)).into_iter().filter(|r| r[3] == "FAIL").map(|r| r[0].clone()).collect();
    assert!(failing.contains(&"particular-solution residual".to_string()), "{failing:?}");
}

#[test]
fn output_is_deterministic() {
    let cfg = format!(r#"{{{ONE_JUMP}, "problem": {{"P": [0, 1], "Q": 0.5, "f": {{"kind": "poly", "coeffs": [1, 0.5]}}, "x0": 1}}}}"#);
    let a = run_config(&cfg, &["solve2", "--grid-n", "64"]);
    let b = run_config(&cfg, &["solve2", "--grid-n", "64"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let a = stieltjes(&["helmholtz", "--grid-n", "32"]);
    let b = stieltjes(&["helmholtz", "--grid-n", "32"]);
    assert_eq!(a.stdout, b.stdout);
}
