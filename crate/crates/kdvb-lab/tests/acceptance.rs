//! End-to-end acceptance runs over the reference configurations in `configs/`.
//!
//! Each reference configuration runs once. Every acceptance property then
//! selects its checks from the matching report, enforces its runtime budget
//! and prints one `PASS`/`FAIL` line followed by the measured values. The
//! process exits nonzero if any property fails; all of them are evaluated
//! regardless.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use kdvb_lab::experiment::{self, ExperimentConfig, RunReport};

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

struct Run {
    report: RunReport,
    seconds: f64,
}

fn run_config(file: &str) -> Run {
    let cfg =
        ExperimentConfig::load(&config_dir().join(file)).expect("reference configuration loads");
    let start = Instant::now();
    let report = experiment::run(&cfg).expect("run completes");
    Run {
        report,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Checks whose name equals one of `names` or starts with one of `prefixes`;
/// each prefix must match exactly `per_prefix` checks.
fn verdict(
    label: &str,
    run: &Run,
    names: &[&str],
    prefixes: &[&str],
    per_prefix: usize,
    budget: f64,
) -> bool {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in names {
        match run.report.check(name) {
            Some(c) => {
                ok &= c.passed;
                lines.push(format!("{} = {:e} ({})", c.name, c.measured, c.limit));
            }
            None => {
                ok = false;
                lines.push(format!("{name} missing"));
            }
        }
    }
    for prefix in prefixes {
        let hits: Vec<_> = run
            .report
            .checks
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .collect();
        if hits.len() != per_prefix {
            ok = false;
            lines.push(format!(
                "{prefix}*: {} checks, expected {per_prefix}",
                hits.len()
            ));
        }
        for c in hits {
            ok &= c.passed;
            lines.push(format!("{} = {:e} ({})", c.name, c.measured, c.limit));
        }
    }
    ok &= run.seconds < budget;
    lines.push(format!("runtime {:.2} s (< {budget} s)", run.seconds));
    report_line(label, ok, &lines)
}

fn report_line(label: &str, ok: bool, lines: &[String]) -> bool {
    println!("{label}: {}", if ok { "PASS" } else { "FAIL" });
    for l in lines {
        println!("    {l}");
    }
    ok
}

fn files_of(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "json" || x == "csv")
                && p.file_name().unwrap() != "timing.json"
            {
                out.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn reruns_are_byte_identical() -> bool {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let start = Instant::now();
    let first = experiment::reproduce_all(&config_dir(), a.path(), None);
    let second = experiment::reproduce_all(&config_dir(), b.path(), None);
    let secs = start.elapsed().as_secs_f64();
    if let Err(e) = first.and(second) {
        return report_line("determinism", false, &[format!("run failed: {e}")]);
    }
    let (fa, fb) = (files_of(a.path()), files_of(b.path()));
    let configs = experiment::config_files(&config_dir()).unwrap().len();
    let reports = fa.keys().filter(|p| p.ends_with("report.json")).count();
    let mut lines = vec![format!(
        "{reports} reports of {configs} configurations, {} files compared, {secs:.1} s",
        fa.len()
    )];
    let differing: Vec<_> = fa
        .iter()
        .filter(|(k, v)| fb.get(*k) != Some(*v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    if !differing.is_empty() {
        lines.push(format!("differing: {}", differing.join(", ")));
    }
    let ok = reports == configs
        && fa.contains_key(Path::new("summary.json"))
        && fa.keys().eq(fb.keys())
        && differing.is_empty();
    report_line("determinism", ok, &lines)
}

fn main() -> ExitCode {
    let simulate = run_config("simulate.toml");
    let carleman = run_config("carleman.toml");
    let observability = run_config("observability.toml");
    let null = run_config("control-null.toml");
    let cutoff = run_config("control-cutoff.toml");
    assert_eq!(cutoff.report.config.grid.n, 128);

    let outcomes = [
        verdict(
            "dissipativity",
            &simulate,
            &["quadratic-form", "energy-residual-order"],
            &[],
            0,
            10.0,
        ),
        verdict(
            "semigroup contraction",
            &simulate,
            &["step-ratio", "oracle-error", "oracle-halving-ratio"],
            &[],
            0,
            30.0,
        ),
        verdict(
            "carleman algebra",
            &carleman,
            &["dual-path-gap", "positivity-above-threshold"],
            &["psi-"],
            5,
            60.0,
        ),
        verdict(
            "carleman inequality",
            &carleman,
            &["ratio-spread", "ratio-scale-invariance"],
            &[],
            0,
            300.0,
        ),
        verdict(
            "observability",
            &observability,
            &[
                "mesh-stability",
                "eigen-oracle",
                "c-obs-at-least-one",
                "enlarging-region-never-increases",
            ],
            &[],
            0,
            300.0,
        ),
        verdict(
            "null control",
            &null,
            &[
                "null-endpoint-defect",
                "null-iterations",
                "dense-agreement",
                "null-support-violation",
            ],
            &[],
            0,
            120.0,
        ),
        verdict(
            "cutoff construction",
            &cutoff,
            &[
                "cutoff-initial-defect",
                "cutoff-terminal-defect",
                "cutoff-early-deviation",
                "cutoff-degenerate-control",
            ],
            &[],
            0,
            300.0,
        ),
        verdict(
            "weighted half-line",
            &cutoff,
            &["half-line-initial-defect", "half-line-terminal-defect"],
            &["weighted-step-ratio-"],
            3,
            180.0,
        ),
        verdict(
            "smoothing gains",
            &simulate,
            &[],
            &["smoothing-spread-"],
            3,
            180.0,
        ),
        reruns_are_byte_identical(),
    ];
    let failed = outcomes.iter().filter(|ok| !**ok).count();
    println!(
        "acceptance: {} of {} properties pass",
        outcomes.len() - failed,
        outcomes.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
