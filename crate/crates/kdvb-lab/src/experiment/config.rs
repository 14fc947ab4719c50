use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which runner a configuration drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Observability,
    Carleman,
    Control,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Observability => "observability",
            Command::Carleman => "carleman",
            Command::Control => "control",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub nt: usize,
}

/// Observation or control region: `l` gives `(-l, l)`, `interval` an explicit pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParameterChoice {
    /// The literal string `"auto"`.
    Auto(String),
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarlemanSection {
    pub s: ParameterChoice,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_trials() -> usize {
    50
}

fn default_samples() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub tau: f64,
    pub cg_tol: f64,
    pub cg_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSection {
    pub eps: f64,
    pub eps_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedSection {
    pub b: OneOrMany,
}

/// Initial datum of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialData {
    #[default]
    Random,
    FirstMode,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub command: Command,
    pub grid: GridSection,
    pub time: TimeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<OmegaSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carleman: Option<CarlemanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<CutoffSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighted: Option<WeightedSection>,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(
            path,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("bytes {}..{}", s.start, s.end))
                .unwrap_or_else(|| "<root>".into());
            config_error(&path, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Checks every field against the preconditions of the operations the runner dispatches to.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(config_error(
                "name",
                "must be a non-empty identifier of [A-Za-z0-9_-]",
            ));
        }
        positive("grid.L", self.grid.half_length)?;
        if self.grid.n < crate::grid::MIN_NODES {
            return Err(config_error(
                "grid.n",
                format!("needs at least {} nodes", crate::grid::MIN_NODES),
            ));
        }
        positive("time.T", self.time.horizon)?;
        if self.time.nt == 0 {
            return Err(config_error("time.nt", "must be positive"));
        }
        if let Some(o) = &self.omega {
            let (l1, l2) = match (o.l, o.interval) {
                (Some(l), None) => (-l, l),
                (None, Some([a, b])) => (a, b),
                _ => {
                    return Err(config_error(
                        "omega",
                        "give exactly one of `l` or `interval`",
                    ))
                }
            };
            let big_l = self.grid.half_length;
            if !(-big_l <= l1 && l1 < l2 && l2 <= big_l) {
                return Err(config_error(
                    "omega",
                    format!("({l1}, {l2}) is not a subinterval of (-{big_l}, {big_l})"),
                ));
            }
        }
        if let Some(c) = &self.carleman {
            match &c.s {
                ParameterChoice::Auto(s) if s == "auto" => {}
                ParameterChoice::Auto(s) => {
                    return Err(config_error(
                        "carleman.s",
                        format!("expected \"auto\" or a list, got {s:?}"),
                    ))
                }
                ParameterChoice::List(v) if v.is_empty() => {
                    return Err(config_error("carleman.s", "empty list"))
                }
                ParameterChoice::List(v) => {
                    for (i, &s) in v.iter().enumerate() {
                        positive(&format!("carleman.s[{i}]"), s)?;
                    }
                }
            }
            if c.trials == 0 {
                return Err(config_error("carleman.trials", "must be positive"));
            }
            if c.samples == 0 {
                return Err(config_error("carleman.samples", "must be positive"));
            }
        }
        if let Some(c) = &self.control {
            if !(c.tau >= 0.0) || !c.tau.is_finite() {
                return Err(config_error("control.tau", "must be nonnegative"));
            }
            if !(c.cg_tol >= 0.0) {
                return Err(config_error("control.cg_tol", "must be nonnegative"));
            }
            if c.cg_max == 0 {
                return Err(config_error("control.cg_max", "must be positive"));
            }
        }
        if let Some(c) = &self.cutoff {
            if !(c.eps > 0.0 && c.eps < c.eps_prime && c.eps_prime < 0.5 * self.time.horizon) {
                return Err(config_error("cutoff", "need 0 < eps < eps_prime < T/2"));
            }
        }
        if let Some(w) = &self.weighted {
            let b = w.b.values();
            if b.is_empty() {
                return Err(config_error("weighted.b", "empty list"));
            }
            for (i, &v) in b.iter().enumerate() {
                positive(&format!("weighted.b[{i}]"), v)?;
            }
        }
        let needs = |present: bool, section: &str| {
            if present {
                Ok(())
            } else {
                Err(config_error(
                    section,
                    format!("section is required by the {} runner", self.command.name()),
                ))
            }
        };
        match self.command {
            Command::Simulate => Ok(()),
            Command::Observability => needs(self.omega.is_some(), "omega"),
            Command::Carleman => {
                needs(self.omega.is_some(), "omega")?;
                needs(self.carleman.is_some(), "carleman")
            }
            Command::Control => {
                needs(self.omega.is_some(), "omega")?;
                needs(self.control.is_some(), "control")
            }
        }
    }

    /// Observation region; the full interval when absent.
    pub fn region(&self) -> (f64, f64) {
        match &self.omega {
            Some(OmegaSection { l: Some(l), .. }) => (-l, *l),
            Some(OmegaSection {
                interval: Some([a, b]),
                ..
            }) => (*a, *b),
            _ => (-self.grid.half_length, self.grid.half_length),
        }
    }

    /// Canonical serialized form; the input of the content hash.
    pub fn canonical(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
name = "demo"
command = "simulate"
[grid]
L = 1.0
n = 32
[time]
T = 1.0
nt = 16
"#;

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(c.grid.n, 32);
        assert_eq!(c.initial, InitialData::Random);
        assert_eq!(c.region(), (-1.0, 1.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml(&format!("{BASE}\nextra = 1\n")).unwrap_err();
        assert!(matches!(err, Error::Config { .. }), "{err}");
        let nested = BASE.replace("nt = 16", "nt = 16\ndt = 0.1");
        assert!(ExperimentConfig::from_toml(&nested).is_err());
    }

    #[test]
    fn errors_name_the_field() {
        let bad = BASE.replace("n = 32", "n = 4");
        match ExperimentConfig::from_toml(&bad).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "grid.n"),
            e => panic!("{e}"),
        }
        let omega = format!("{BASE}[omega]\nl = 2.0\n");
        match ExperimentConfig::from_toml(&omega).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "omega"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn runner_sections_are_required() {
        let ctl = BASE.replace("\"simulate\"", "\"control\"");
        assert!(ExperimentConfig::from_toml(&ctl).is_err());
        let full = format!("{ctl}[omega]\ninterval = [-0.5, 0.5]\n[control]\ntau = 1e-10\ncg_tol = 1e-6\ncg_max = 100\n");
        let c = ExperimentConfig::from_toml(&full).unwrap();
        assert_eq!(c.region(), (-0.5, 0.5));
    }

    #[test]
    fn carleman_choice_accepts_auto_and_lists() {
        let base = BASE.replace("\"simulate\"", "\"carleman\"") + "[omega]\nl = 0.5\n";
        let auto =
            ExperimentConfig::from_toml(&format!("{base}[carleman]\ns = \"auto\"\n")).unwrap();
        assert_eq!(auto.carleman.unwrap().trials, 50);
        assert!(
            ExperimentConfig::from_toml(&format!("{base}[carleman]\ns = [10.0, 20.0]\n")).is_ok()
        );
        assert!(ExperimentConfig::from_toml(&format!("{base}[carleman]\ns = \"big\"\n")).is_err());
        assert!(ExperimentConfig::from_toml(&format!("{base}[carleman]\ns = [-1.0]\n")).is_err());
    }

    #[test]
    fn canonical_form_round_trips() {
        let c =
            ExperimentConfig::from_toml(&format!("{BASE}[weighted]\nb = [0.5, 1.0]\n")).unwrap();
        let again = ExperimentConfig::from_toml(&c.canonical().unwrap()).unwrap();
        assert_eq!(c, again);
    }
}
