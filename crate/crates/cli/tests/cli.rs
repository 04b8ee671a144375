use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn ami(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ami")).args(args).output().expect("run ami")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data")
        .join(name)
        .display()
        .to_string()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// A CSV of simulated dependent data.
fn simulated(dir: &Path, args: &[&str]) -> String {
    let path = dir.join("sim.csv");
    let mut full = vec!["simulate", "--output", path.to_str().unwrap()];
    full.extend_from_slice(args);
    let out = ami(&full);
    assert!(out.status.success(), "{}", stderr(&out));
    path.display().to_string()
}

#[test]
fn estimate_abalone_age_length() {
    let v = json(&ami(&["estimate", "--input", &data("abalone.csv"), "--cols", "age,length"]));
    assert_eq!(v["x_label"], "age");
    assert_eq!(v["n"], 4177);
    assert!(v["delta_hat"].as_f64().unwrap() > 0.0);
    let ci = &v["inference"]["delta_ci"];
    assert!(ci[0].as_f64().unwrap() <= ci[1].as_f64().unwrap());
}

#[test]
fn estimate_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulated(dir.path(), &["--copula", "clayton", "--theta", "2", "--n", "600", "--marginal-x", "exp:1"]);
    let out_path = dir.path().join("report.json");
    let out = ami(&["estimate", "--input", &input, "--cols", "X,Y", "--output", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let report: ami_core::estimators::AmiReport = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_string_pretty(&report).unwrap();
    assert_eq!(text.trim_end(), again);
}

#[test]
fn estimate_is_deterministic_and_no_split_drops_inference() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulated(dir.path(), &["--pattern", "P1", "--a", "1", "--n", "400", "--seed", "3"]);
    let args = ["estimate", "--input", &input, "--cols", "X,Y", "--split-seed", "9"];
    assert_eq!(ami(&args).stdout, ami(&args).stdout);
    let v = json(&ami(&["estimate", "--input", &input, "--cols", "X,Y", "--no-split"]));
    assert!(v["inference"].is_null());
    assert_eq!(v["n1"], 400);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let out = ami(&["estimate", "--input", missing.to_str().unwrap(), "--cols", "x,y"]);
    assert_eq!(code(&out), 2);

    let bad = write(dir.path(), "bad.csv", "x,y\n1,2\n3,4\n5,NaN\n");
    let out = ami(&["estimate", "--input", bad.to_str().unwrap(), "--cols", "x,y"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("row 3"), "{}", stderr(&out));

    let short = write(dir.path(), "short.csv", "x,y\n1,2\n3,4\n5,1\n");
    let out = ami(&["estimate", "--input", short.to_str().unwrap(), "--cols", "x,y"]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));

    let out = ami(&["estimate", "--input", bad.to_str().unwrap(), "--cols", "x,z"]);
    assert_eq!(code(&out), 4);

    let out = ami(&["estimate", "--input", bad.to_str().unwrap(), "--cols", "x,y", "--alpha", "0.7"]);
    assert_eq!(code(&out), 4);

    assert_eq!(code(&ami(&["--help"])), 0);
    assert_eq!(code(&ami(&["frobnicate"])), 4);
}

#[test]
fn independence_test_flags() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulated(dir.path(), &["--pattern", "P3", "--a", "0.6", "--n", "300"]);
    let null_csv = dir.path().join("null.csv");
    let v = json(&ami(&[
        "test-independence",
        "--input",
        &input,
        "--cols",
        "X,Y",
        "--permutations",
        "99",
        "--null-csv",
        null_csv.to_str().unwrap(),
    ]));
    assert_eq!(v["reject"], true);
    assert_eq!(v["statistic"], "ami_xy");
    assert_eq!(v["null_stats"].as_array().unwrap().len(), 99);
    assert_eq!(std::fs::read_to_string(&null_csv).unwrap().lines().count(), 100);

    let out = ami(&["test-independence", "--input", &input, "--cols", "X,Y", "--permutations", "9"]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("permutations"));
}

#[test]
fn asymmetry_test_reports_conclusion_and_independence_warning() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulated(dir.path(), &["--pattern", "P1", "--a", "0", "--n", "300", "--seed", "5"]);
    let v = json(&ami(&["test-asymmetry", "--input", &input, "--cols", "X,Y", "--permutations", "99", "--seed", "1"]));
    assert!(["symmetric", "X_dominant", "Y_dominant"].contains(&v["conclusion"].as_str().unwrap()));
    let warnings = v["warnings"].as_array().unwrap();
    let flagged = warnings.iter().any(|w| w["kind"] == "possible_independence");
    let v2 = json(&ami(&["test-independence", "--input", &input, "--cols", "X,Y", "--permutations", "99", "--seed", "1"]));
    assert_eq!(flagged, v2["reject"] == false);

    let v = json(&ami(&["test-asymmetry", "--input", &data("abalone.csv"), "--cols", "age,diameter", "--skip-independence"]));
    assert_eq!(v["conclusion"], "X_dominant");
}

#[test]
fn simulate_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulated(dir.path(), &["--copula", "gumbel", "--theta", "2", "--n", "50", "--seed", "4"]);
    let text = std::fs::read_to_string(&input).unwrap();
    assert!(text.starts_with("X,Y\n"));
    assert_eq!(text.lines().count(), 51);
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("sim.json")).unwrap()).unwrap();
    assert_eq!(meta["design"], "copula");
    assert_eq!(meta["spec"]["family"], "gumbel");
    assert!((meta["oracle"]["kendall_tau"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let again = simulated(dir.path(), &["--copula", "gumbel", "--theta", "2", "--n", "50", "--seed", "4"]);
    assert_eq!(std::fs::read_to_string(again).unwrap(), text);

    let out = ami(&["simulate", "--pattern", "P1", "--a", "0.1,0.2", "--output", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(code(&out), 4);
}

#[test]
fn mc_rows_are_ordered_with_summaries() {
    let out = ami(&[
        "mc", "--pattern", "P1", "--a", "0,1", "--n", "200", "--reps", "4", "--permutations", "99", "--seed", "2",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 10);
    let kinds: Vec<&str> = rows.iter().map(|r| &r[col("row_type")]).collect();
    assert_eq!(kinds[4], "summary");
    assert_eq!(kinds[9], "summary");
    let reps: Vec<&str> = rows[..4].iter().map(|r| &r[col("replicate")]).collect();
    assert_eq!(reps, ["0", "1", "2", "3"]);
    // a = 0 has a known Delta, a = 1 does not
    assert!(!rows[4][col("covers_truth")].is_empty());
    assert!(rows[9][col("covers_truth")].is_empty());
    let power: f64 = rows[9][col("perm_reject")].parse().unwrap();
    assert_eq!(power, 1.0);
    // replicate seeds are shared across signal levels
    assert_eq!(rows[0][col("seed")], rows[5][col("seed")]);
}

#[test]
fn bench_reports_timings_and_ise() {
    let v = json(&ami(&["bench", "--n", "300", "--grid", "256", "--candidates", "4", "--reps", "1"]));
    let r = &v["results"][0];
    assert_eq!(r["n"], 300);
    for k in ["sce_seconds", "kde_seconds", "loo_kde_seconds", "sce_ise", "kde_ise", "loo_kde_ise"] {
        assert!(r[k].as_f64().unwrap() >= 0.0, "{k}");
    }
    assert!(v["machine"]["threads"].as_u64().unwrap() >= 1);
    assert_eq!(v["grid_points"], 256);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulated(dir.path(), &["--pattern", "P2", "--a", "1", "--n", "300"]);
    let cfg = write(dir.path(), "run.conf", &format!("input = {input}\ncols = X,Y\nno_split = true\n"));
    let v = json(&ami(&["estimate", "--config", cfg.to_str().unwrap()]));
    assert!(v["inference"].is_null());
    let cfg = write(dir.path(), "run.json", &format!(r#"{{"input": "{input}", "cols": "X,Y", "split_seed": 4}}"#));
    let from_file = ami(&["estimate", "--config", cfg.to_str().unwrap()]);
    let direct = ami(&["estimate", "--input", &input, "--cols", "X,Y", "--split-seed", "4"]);
    assert_eq!(from_file.stdout, direct.stdout);
    let overridden = ami(&["estimate", "--config", cfg.to_str().unwrap(), "--split-seed", "0"]);
    let default_seed = ami(&["estimate", "--input", &input, "--cols", "X,Y"]);
    assert_eq!(overridden.stdout, default_seed.stdout);
}
