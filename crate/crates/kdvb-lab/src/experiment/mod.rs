//! Reproducible experiment runs driven by TOML configurations.
//!
//! Each run yields a [`RunReport`] written as `report.json` plus one CSV file
//! per table. Reports depend only on the configuration and the seed; the
//! wall-clock time goes to a separate `timing.json` so that reports of
//! repeated runs are byte-identical.

mod config;
mod runners;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{
    CarlemanSection, Command, ControlSection, CutoffSection, ExperimentConfig, GridSection,
    InitialData, OmegaSection, OneOrMany, ParameterChoice, TimeSection, WeightedSection,
};
pub use runners::{
    bump_source, carleman_sweep, coefficient_gap_sweep, dissipativity_scan, eigen_oracle,
    exponential_oracle, first_mode, nested_regions, observability_table, random_smooth_state,
    residual_refinement, run_carleman, run_control, run_observability, run_simulate,
    smoothing_sweep, CarlemanTrial, DissipativityScan, ExponentialOracle, ObservabilityRow,
    RefinementRow, SmoothingRow, DENSE_CONTROL_NODES, ORACLE_NODES,
};

use crate::error::{invalid, Error, Result};

/// One named pass/fail outcome with the measured quantity and its limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub limit: String,
}

impl Check {
    pub fn at_most(name: &str, measured: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            passed: measured <= limit,
            measured,
            limit: format!("<= {limit:e}"),
        }
    }

    pub fn below(name: &str, measured: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            passed: measured < limit,
            measured,
            limit: format!("< {limit:e}"),
        }
    }

    pub fn at_least(name: &str, measured: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            passed: measured >= limit,
            measured,
            limit: format!(">= {limit:e}"),
        }
    }

    pub fn within(name: &str, measured: f64, lo: f64, hi: f64) -> Self {
        Check {
            name: name.into(),
            passed: (lo..=hi).contains(&measured),
            measured,
            limit: format!("in [{lo:e}, {hi:e}]"),
        }
    }

    pub fn exactly(name: &str, measured: f64, value: f64) -> Self {
        Check {
            name: name.into(),
            passed: measured == value,
            measured,
            limit: format!("== {value:e}"),
        }
    }
}

/// Numeric table emitted as a CSV side file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// CSV text: `,` delimiter, header row, LF line endings, round-trip float formatting.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        w.write_record(&self.columns).map_err(ser)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:?}")))
                .map_err(ser)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    pub command: Command,
    pub config: ExperimentConfig,
    /// `sha256("blob <len>\0" + canonical config)`, hex encoded.
    pub input_hash: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `report.json`, one CSV per table and `timing.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        write_file(&dir.join("report.json"), &self.to_json()?)?;
        for t in &self.tables {
            write_file(&dir.join(format!("{}.csv", t.name)), &t.to_csv()?)?;
        }
        let timing =
            serde_json::json!({ "name": self.name, "wall_clock_seconds": self.wall_clock_seconds });
        write_file(&dir.join("timing.json"), &format!("{timing}\n"))
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Git-style content hash of a byte string.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

/// Validates the configuration and dispatches to its runner.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let (checks, tables) = match cfg.command {
        Command::Simulate => run_simulate(cfg)?,
        Command::Observability => run_observability(cfg)?,
        Command::Carleman => run_carleman(cfg)?,
        Command::Control => run_control(cfg)?,
    };
    Ok(RunReport {
        name: cfg.name.clone(),
        command: cfg.command,
        config: cfg.clone(),
        input_hash: content_hash(cfg.canonical()?.as_bytes()),
        passed: checks.iter().all(|c| c.passed),
        checks,
        tables,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteEntry {
    pub name: String,
    pub command: Command,
    pub input_hash: String,
    pub passed: bool,
    pub failed_checks: Vec<String>,
}

/// Aggregate of a whole configuration directory.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub passed: bool,
    pub runs: Vec<SuiteEntry>,
    #[serde(skip)]
    pub reports: Vec<RunReport>,
}

impl SuiteReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

/// `*.toml` files of a directory in name order.
pub fn config_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for e in entries {
        let path = e
            .map_err(|source| Error::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .path();
        if path.extension().is_some_and(|x| x == "toml") && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(invalid(format!(
            "no configuration files in {}",
            dir.display()
        )));
    }
    Ok(files)
}

/// Runs every configuration in `config_dir`, writing each report to
/// `out/<name>/` and the aggregate to `out/summary.json`. `seed` overrides
/// the seeds of all configurations.
pub fn reproduce_all(config_dir: &Path, out: &Path, seed: Option<u64>) -> Result<SuiteReport> {
    let mut configs = Vec::new();
    for path in config_files(config_dir)? {
        let mut cfg = ExperimentConfig::load(&path)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if configs
            .iter()
            .any(|c: &ExperimentConfig| c.name == cfg.name)
        {
            return Err(invalid(format!("duplicate experiment name {:?}", cfg.name)));
        }
        configs.push(cfg);
    }
    let mut reports = Vec::new();
    for cfg in &configs {
        let report = run(cfg)?;
        report.write(&out.join(&cfg.name))?;
        reports.push(report);
    }
    let runs: Vec<SuiteEntry> = reports
        .iter()
        .map(|r| SuiteEntry {
            name: r.name.clone(),
            command: r.command,
            input_hash: r.input_hash.clone(),
            passed: r.passed,
            failed_checks: r.failed().into_iter().map(String::from).collect(),
        })
        .collect();
    let suite = SuiteReport {
        passed: runs.iter().all(|r| r.passed),
        runs,
        reports,
    };
    write_file(&out.join("summary.json"), &suite.to_json()?)?;
    Ok(suite)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_matches_git_blob_framing() {
        // sha256 of "blob 0\0"
        assert_eq!(
            content_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
        assert_ne!(content_hash(b"a"), content_hash(b"b"));
    }

    #[test]
    fn csv_uses_lf_and_header() {
        let mut t = Table::new("norms", &["t", "norm"]);
        t.push(vec![0.0, 1e-10]);
        t.push(vec![0.5, 0.25]);
        assert_eq!(t.to_csv().unwrap(), "t,norm\n0.0,1e-10\n0.5,0.25\n");
        assert_eq!(t.column("norm").unwrap(), vec![1e-10, 0.25]);
    }

    #[test]
    fn check_constructors() {
        assert!(Check::at_most("a", 1.0, 1.0).passed);
        assert!(!Check::below("a", 1.0, 1.0).passed);
        assert!(Check::within("a", 4.0, 3.0, 5.0).passed);
        assert!(!Check::at_least("a", f64::NAN, 1.0).passed);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        assert!(reproduce_all(dir.path(), out.path(), None).is_err());
    }
}
