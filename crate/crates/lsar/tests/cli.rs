// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn lsar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsar")).args(args).output().expect("spawn lsar")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr not json ({e}): {text}"))
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

/// Parses `key=[a,b,...]` out of a status line.
fn vector(out: &str, key: &str) -> Vec<f64> {
    let start = out.find(&format!("{key}=[")).expect("key present") + key.len() + 2;
    let end = start + out[start..].find(']').unwrap();
    out[start..end].split(',').map(|v| v.parse().unwrap()).collect()
}

fn generate(dir: &TempDir, name: &str, extra: &[&str]) -> String {
    let out = path(dir, name);
    let mut args = vec!["generate", "--output", &out];
    args.extend_from_slice(extra);
    let o = lsar(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn generate_is_deterministic_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let a = generate(&dir, "a.csv", &["--fixture", "ar5", "--n", "500", "--seed", "9"]);
    let b = generate(&dir, "b.csv", &["--fixture", "ar5", "--n", "500", "--seed", "9"]);
    let c = generate(&dir, "c.csv", &["--fixture", "ar5", "--n", "500", "--seed", "10"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(format!("{a}.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["n"], 500);
}

#[test]
fn generate_rejects_empty_length_with_usage_code() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "x.csv");
    let o = lsar(&["generate", "--phi", "0.5", "--n", "0", "--output", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["class"], "usage");
    assert!(!Path::new(&out).exists());
}

#[test]
fn explosive_generator_is_a_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "x.csv");
    let o = lsar(&["generate", "--phi", "1.5", "--n", "100000", "--output", &out]);
    assert_eq!(o.status.code(), Some(4));
    let err = stderr_json(&o);
    assert_eq!(err["error"]["kind"], "diverged");
    assert_eq!(err["error"]["exit_code"], 4);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn ingest_log_diff_of_exponentials() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "e.csv");
    let e = std::f64::consts::E;
    fs::write(&input, format!("date,price\nd0,{}\nd1,{}\nd2,{}\n", e, e.powi(3), e.powi(6))).unwrap();
    let out = path(&dir, "o.csv");
    let o = lsar(&["ingest", "-i", &input, "--column", "price", "--transform", "log-diff", "-o", &out]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("original_n=3 n=2"));
    let values: Vec<f64> = fs::read_to_string(&out).unwrap().lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 2);
    assert!((values[0] - 2.0).abs() < 1e-12 && (values[1] - 3.0).abs() < 1e-12);
}

#[test]
fn missing_column_lists_headers() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "e.csv");
    fs::write(&input, "a,b\n1,2\n3,4\n").unwrap();
    let o = lsar(&["ingest", "-i", &input, "--column", "zz", "-o", &path(&dir, "o.csv")]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr_json(&o);
    assert_eq!(err["error"]["kind"], "missing_column");
    assert_eq!(err["error"]["available"], serde_json::json!(["a", "b"]));
}

#[test]
fn unparsable_value_reports_its_line() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "bad.csv");
    fs::write(&input, "y\n1\n2\nabc\n4\n").unwrap();
    let o = lsar(&["fit", "-i", &input, "-p", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr_json(&o)["error"]["message"].as_str().unwrap().contains("abc"));
}

#[test]
fn fit_hand_computed_order_one() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "a.csv");
    fs::write(&input, "y\n1\n2\n3\n").unwrap();
    let report = path(&dir, "fit.json");
    let o = lsar(&["fit", "-i", &input, "-p", "1", "-o", &report]);
    assert!(o.status.success());
    let phi = vector(&stdout(&o), "phi");
    assert!((phi[0] - 1.6).abs() < 1e-12);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["rows"][0]["lag"], 1);
    assert!((json["rows"][0]["coefficient"].as_f64().unwrap() - 1.6).abs() < 1e-12);
    assert_eq!(json["metadata"]["experiment"], "fit");
}

#[test]
fn exact_pacf_of_noiseless_geometric_series() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "g.csv");
    let body: String = (0..40).map(|i| format!("{}\n", 1000.0 * 0.5f64.powi(i))).collect();
    fs::write(&input, format!("y\n{body}")).unwrap();
    let o = lsar(&["pacf", "-i", &input, "--pbar", "3", "--exact"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tau = vector(&stdout(&o), "tau");
    assert!((tau[0] - 0.5).abs() < 1e-12);
    assert!(tau[1].abs() < 1e-12 && tau[2].abs() < 1e-12);
    assert!(stdout(&o).contains("selected_order=1"));
}

#[test]
fn lsar_recovers_ar5_and_writes_reproducible_report() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "ar5.csv", &["--fixture", "ar5", "--n", "20000", "--seed", "4"]);
    let run = |name: &str| {
        let out = path(&dir, name);
        let o = lsar(&["lsar", "-i", &input, "--pbar", "10", "--fraction", "0.05", "--seed", "1", "-o", &out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("p*=5"), "{}", stdout(&o));
        fs::read_to_string(out).unwrap()
    };
    let body = |s: String| s.lines().filter(|l| !l.starts_with('#')).map(str::to_owned).collect::<Vec<_>>();
    let a = run("a.csv");
    assert!(a.contains("# generator: AR(5)"));
    assert!(a.contains("# seed: 1"));
    assert!(a.contains("# size_rule: fraction"));
    assert_eq!(body(a), body(run("b.csv")));
}

#[test]
fn eval_commands_produce_reports() {
    let dir = TempDir::new().unwrap();
    let input = generate(
        &dir,
        "c.csv",
        &["--fixture", "ar5", "--n", "5000", "--seed", "2", "--contaminate", "0.001"],
    );
    let mpre = path(&dir, "mpre.csv");
    let o = lsar(&["eval", "mpre", "-i", &input, "--pbar", "8", "--fraction", "0.1", "-o", &mpre]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&mpre).unwrap().lines().filter(|l| !l.starts_with('#')).count(), 9);

    let bounds = path(&dir, "bounds.json");
    assert!(lsar(&["eval", "bounds", "-i", &input, "--pbar", "8", "-o", &bounds]).status.success());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&bounds).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 8);

    let ratios = path(&dir, "ratios.csv");
    let o = lsar(&[
        "eval", "ratios", "-i", &input, "-p", "5", "--sizes", "100,200", "--reps", "5", "--threads", "2", "-o",
        &ratios,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let min: f64 = stdout(&o).split("min_resid_ratio=").nth(1).unwrap().trim().parse().unwrap();
    assert!(min >= 1.0 - 1e-10);

    let o = lsar(&["eval", "timing", "-i", &input, "--pbar", "4", "--fraction", "0.1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("ratio="));
}

#[test]
fn threads_zero_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "a.csv", &["--phi", "0.5", "--n", "500"]);
    let o = lsar(&["eval", "ratios", "-i", &input, "-p", "1", "--sizes", "50", "--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_write_leaves_no_partial_file() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "a.csv", &["--phi", "0.5", "--n", "500"]);
    let blocker = path(&dir, "not_a_dir");
    fs::write(&blocker, "").unwrap();
    let target = format!("{blocker}/r.csv");
    let o = lsar(&["fit", "-i", &input, "-p", "1", "-o", &target]);
    assert_eq!(o.status.code(), Some(3));
    let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 3, "{names:?}");
}

#[test]
fn invalid_order_exits_with_usage_code() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "a.csv", &["--phi", "0.5", "--n", "50"]);
    let o = lsar(&["lsar", "-i", &input, "--pbar", "40"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["class"], "usage");
}
