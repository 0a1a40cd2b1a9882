//! The `stmaxwell` binary: outputs, exit codes and reproducibility.

use std::process::{Command, Output};

use stmaxwell::verify::CSV_HEADER;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stmaxwell")).args(args).output().expect("binary runs")
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn converge_writes_decreasing_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex1.csv");
    let o = run(&["converge", "--case", "ex1", "--ns", "6,10,14", "--mode", "full", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 3);
    let err_ey: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(err_ey.windows(2).all(|w| w[1] < w[0]), "{err_ey:?}");
}

#[test]
fn condnum_reports_slope_line() {
    let o = run(&["condnum", "--op", "a_lap", "--ns", "4,6,8,10"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("N,kappa,min_re_lambda"));
    assert_eq!(text.lines().count(), 6);
    let slope: f64 = text.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((3.0..=4.5).contains(&slope), "{slope}");
}

#[test]
fn compare_reports_small_difference() {
    let o = run(&["compare", "--case", "ex1", "--n", "8", "--tt-tol", "1e-10", "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["max_difference"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn usage_and_solver_failures_have_distinct_codes() {
    for args in [&["solve", "--case", "nope", "--n", "6"][..], &["solve"], &["condnum", "--op", "a_div", "--ns", "4,6"]]
    {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    let o = Command::new(env!("CARGO_BIN_EXE_stmaxwell"))
        .args(["solve", "--case", "ex1", "--n", "6", "--mode", "tt"])
        .env(stmaxwell::limits::MEM_CAP_ENV, "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("memory cap"), "{err}");
}

#[test]
fn identical_runs_give_identical_bytes() {
    let args = ["converge", "--case", "ex2", "--ns", "6,8", "--mode", "tt", "--tt-tol", "1e-9", "--seed", "3"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn help_lists_subcommands() {
    let o = run(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for sub in ["solve", "converge", "condnum", "compare"] {
        assert!(text.contains(sub));
    }
}
