//! Exit codes, output layout and determinism of the `kdvb` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kdvb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kdvb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn reference(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn passing_run_exits_zero_and_writes_reports() {
    let out = tempfile::tempdir().unwrap();
    let o = kdvb(&[
        "control",
        "--config",
        arg(&reference("control-null.toml")),
        "--out",
        arg(out.path()),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout
        .lines()
        .any(|l| l.starts_with("PASS  control-null/null-endpoint-defect")));
    for f in [
        "report.json",
        "timing.json",
        "null_history.csv",
        "endpoint_defects.csv",
    ] {
        assert!(out.path().join(f).exists(), "{f}");
    }
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("coarse.toml");
    // on a coarse mesh the first refinement step is far from the asymptotic order
    fs::write(&cfg, "name = \"coarse\"\ncommand = \"simulate\"\nseed = 1\n[grid]\nL = 1.0\nn = 16\n[time]\nT = 0.5\nnt = 32\n").unwrap();
    let o = kdvb(&[
        "simulate",
        "--config",
        arg(&cfg),
        "--out",
        arg(&dir.path().join("res")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .contains("FAIL  coarse/energy-residual-order"));
}

#[test]
fn mismatched_subcommand_is_an_error() {
    let out = tempfile::tempdir().unwrap();
    let o = kdvb(&[
        "carleman",
        "--config",
        arg(&reference("simulate.toml")),
        "--out",
        arg(out.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .contains("not `carleman`"));
}

#[test]
fn empty_config_directory_is_an_error() {
    let (dir, out) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let o = kdvb(&[
        "reproduce-all",
        "--config",
        arg(dir.path()),
        "--out",
        arg(out.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "name = \"bad\"\ncommand = \"simulate\"\nseed = 1\nsteps = 3\n[grid]\nL = 1.0\nn = 16\n[time]\nT = 1.0\nnt = 8\n").unwrap();
    let o = kdvb(&["simulate", "--config", arg(&cfg), "--out", arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = reference("simulate.toml");
    kdvb(&[
        "simulate",
        "--config",
        arg(&cfg),
        "--out",
        arg(a.path()),
        "--threads",
        "1",
    ]);
    kdvb(&[
        "simulate",
        "--config",
        arg(&cfg),
        "--out",
        arg(b.path()),
        "--threads",
        "4",
    ]);
    for f in ["report.json", "norms.csv", "smoothing.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn seed_override_changes_the_report() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = reference("simulate.toml");
    kdvb(&["simulate", "--config", arg(&cfg), "--out", arg(a.path())]);
    kdvb(&[
        "simulate",
        "--config",
        arg(&cfg),
        "--out",
        arg(b.path()),
        "--seed",
        "3",
    ]);
    let (ra, rb) = (
        fs::read_to_string(a.path().join("report.json")).unwrap(),
        fs::read_to_string(b.path().join("report.json")).unwrap(),
    );
    assert_ne!(ra, rb);
    assert!(rb.contains("\"seed\": 3"));
}
