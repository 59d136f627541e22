//! Experiment configuration, loaded from TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Sweep the number of measurements `M`.
    MSweep,
    /// Two components separated by `mu / L` cycles, sweeping `mu`.
    SpacingSweep,
    /// Repeated trials at one `M`.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Reweighted MM with learned frequencies.
    Proposed,
    /// The same loop on the frozen initial grid.
    FixedGrid,
    /// Least squares on the true frequencies.
    OracleLs,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Proposed, Method::FixedGrid, Method::OracleLs];

    pub fn label(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::FixedGrid => "fixed_grid",
            Method::OracleLs => "oracle_ls",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.label() == s.trim())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method `{s}` (expected proposed, fixed_grid or oracle_ls)"
                ))
            })
    }
}

/// Parse a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

fn default_len() -> usize {
    64
}

fn default_m_values() -> Vec<usize> {
    vec![15, 20, 25, 30, 35, 40]
}

fn default_mu_values() -> Vec<f64> {
    vec![0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0]
}

fn default_m() -> usize {
    20
}

fn default_min_separation() -> f64 {
    2.0
}

fn default_trials() -> usize {
    100
}

fn default_seed() -> u64 {
    1
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(rename = "L", default = "default_len")]
    pub len: usize,
    /// Component count; defaults to 3, and must be 2 for a spacing sweep.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default = "default_m_values")]
    pub m_values: Vec<usize>,
    #[serde(default = "default_mu_values")]
    pub mu_values: Vec<f64>,
    /// Measurement count for `spacing_sweep` and `single`.
    #[serde(rename = "M", default = "default_m")]
    pub m: usize,
    /// Minimum pairwise separation of drawn frequencies, in units of
    /// `2 pi / L`; 0 disables the constraint. Ignored by `spacing_sweep`.
    #[serde(default = "default_min_separation")]
    pub min_separation: f64,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            len: default_len(),
            k: None,
            m_values: default_m_values(),
            mu_values: default_mu_values(),
            m: default_m(),
            min_separation: default_min_separation(),
            n_trials: default_trials(),
            seed: default_seed(),
            methods: default_methods(),
            solver: SolverConfig::default(),
            output: default_output(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes to TOML")
    }

    /// Effective component count.
    pub fn components(&self) -> usize {
        match self.kind {
            ExperimentKind::SpacingSweep => 2,
            _ => self.k.unwrap_or(3),
        }
    }

    /// Values of the swept axis, in configuration order.
    pub fn axis_values(&self) -> Vec<f64> {
        match self.kind {
            ExperimentKind::MSweep => self.m_values.iter().map(|&m| m as f64).collect(),
            ExperimentKind::SpacingSweep => self.mu_values.clone(),
            ExperimentKind::Single => vec![self.m as f64],
        }
    }

    /// Measurement count of a trial at `axis_value`.
    pub fn measurements_at(&self, axis_value: f64) -> usize {
        match self.kind {
            ExperimentKind::MSweep => axis_value as usize,
            _ => self.m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.solver.validate()?;
        if self.len < 2 {
            return bad(format!("L must be at least 2, got {}", self.len));
        }
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("method set is empty".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return bad(format!("method {m} listed twice"));
            }
        }
        if self.kind == ExperimentKind::SpacingSweep && self.k.is_some_and(|k| k != 2) {
            return bad(format!(
                "spacing_sweep uses K = 2, got K = {}",
                self.k.unwrap_or(0)
            ));
        }
        let k = self.components();
        if k == 0 {
            return bad("K must be positive".into());
        }
        if !(self.min_separation >= 0.0) || !self.min_separation.is_finite() {
            return bad(format!(
                "min_separation must be non-negative, got {}",
                self.min_separation
            ));
        }
        if self.kind != ExperimentKind::SpacingSweep
            && k as f64 * self.min_separation >= self.len as f64
        {
            return bad(format!(
                "{k} components cannot be {} bins apart on L = {}",
                self.min_separation, self.len
            ));
        }
        let check_m = |m: usize| {
            if m < k || m > self.len {
                Err(Error::Config(format!(
                    "M = {m} must lie in [K, L] = [{k}, {}]",
                    self.len
                )))
            } else {
                Ok(())
            }
        };
        match self.kind {
            ExperimentKind::MSweep => {
                if self.m_values.is_empty() {
                    return bad("m_values is empty".into());
                }
                for &m in &self.m_values {
                    check_m(m)?;
                }
                for (i, m) in self.m_values.iter().enumerate() {
                    if self.m_values[..i].contains(m) {
                        return bad(format!("M = {m} listed twice"));
                    }
                }
            }
            ExperimentKind::SpacingSweep => {
                if self.mu_values.is_empty() {
                    return bad("mu_values is empty".into());
                }
                for (i, &mu) in self.mu_values.iter().enumerate() {
                    if !(mu > 0.0) || !mu.is_finite() {
                        return bad(format!("mu must be positive, got {mu}"));
                    }
                    if self.mu_values[..i]
                        .iter()
                        .any(|v| v.to_bits() == mu.to_bits())
                    {
                        return bad(format!("mu = {mu} listed twice"));
                    }
                }
                check_m(self.m)?;
            }
            ExperimentKind::Single => check_m(self.m)?,
        }
        Ok(())
    }
}
