//! The `condexp` binary: artifacts, exit codes and error lines.

use std::path::Path;
use std::process::{Command, Output};

fn condexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condexp"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn small_run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = condexp(&[
        "ce-b",
        "--samples",
        "40",
        "--hidden",
        "5",
        "--iters",
        "30",
        "--eval",
        "-2:2:21",
        "--out",
        path(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let curve = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert!(curve.starts_with("x,exact,est_A1,est_C1\n"));
    assert_eq!(curve.lines().count(), 22);
    let cost = std::fs::read_to_string(dir.path().join("cost.csv")).unwrap();
    assert!(cost.starts_with("iteration,cost_A1,cost_C1\n1,"));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("samples=40\n"));
    assert!(manifest.contains("seed=1\n"));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "samples = 30\nhidden = 4\niters = 10\neval = -1:1:5\nseed = 3\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = condexp(&["lr", "--config", path(&conf), "--seed", "8", "--out", path(&out_dir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest = std::fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed=8\n"));
    assert!(manifest.contains("samples=30\n"));
}

#[test]
fn usage_errors_exit_with_two() {
    let out = condexp(&["ce-a", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error: ConfigError:"));

    let out = condexp(&["ce-a", "--link", "Z9"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr(&out).lines().count(), 1);
}

#[test]
fn range_violation_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = condexp(&[
        "ce-a",
        "--link",
        "C1:0:1",
        "--samples",
        "20",
        "--iters",
        "5",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error: RangeViolation:"), "{}", stderr(&out));

    let out = condexp(&[
        "ce-a",
        "--link",
        "C1:0:1",
        "--samples",
        "20",
        "--hidden",
        "3",
        "--iters",
        "5",
        "--strict-range",
        "false",
        "--eval",
        "-1:1:3",
        "--out",
        path(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn compare_reports_metric_and_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "x,y\n0,1\n1,2\n2,3\n").unwrap();
    std::fs::write(&b, "x,y\n0,1.5\n1,2.5\n2,3.5\n").unwrap();

    let out = condexp(&["compare", path(&a), path(&a), "--col", "y"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "rmse=0.000000e0");

    let out = condexp(&[
        "compare",
        path(&a),
        path(&b),
        "--col",
        "y",
        "--metric",
        "maxabs",
        "--threshold",
        "0.4",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error: CheckFailed:"));

    let out = condexp(&[
        "compare",
        path(&a),
        path(&b),
        "--col",
        "y",
        "--metric",
        "maxabs",
        "--interval",
        "-1:0.5",
        "--threshold",
        "0.5",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let c = dir.path().join("c.csv");
    std::fs::write(&c, "x,y\n0,1\n1.5,2\n2,3\n").unwrap();
    let out = condexp(&["compare", path(&a), path(&c), "--col", "y"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error: GridMismatch:"));
}
