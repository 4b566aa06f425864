use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensembles::EntryDistribution;
use crate::{Error, Result};

/// Optional measurements of a trial. The Kolmogorov distances are always
/// computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Measures {
    pub distance: bool,
    pub smoothing: bool,
    pub deloc: bool,
    pub diagnostics: bool,
}

impl Default for Measures {
    fn default() -> Self {
        Self {
            distance: true,
            smoothing: false,
            deloc: false,
            diagnostics: false,
        }
    }
}

impl FromStr for Measures {
    type Err = Error;

    /// Comma-separated subset of `distance,smoothing,deloc,diagnostics`,
    /// or `all`.
    fn from_str(s: &str) -> Result<Self> {
        let mut m = Measures {
            distance: true,
            smoothing: false,
            deloc: false,
            diagnostics: false,
        };
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match item {
                "distance" => m.distance = true,
                "smoothing" => m.smoothing = true,
                "deloc" => m.deloc = true,
                "diagnostics" => m.diagnostics = true,
                "all" => {
                    m.smoothing = true;
                    m.deloc = true;
                    m.diagnostics = true;
                }
                other => return Err(Error::Config(format!("unknown measurement {other:?}"))),
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    /// Two columns: `n` and the median plain distance.
    Plot,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "plot" => Ok(Self::Plot),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
            Self::Plot => "plot",
        })
    }
}

/// Everything that determines a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub y: f64,
    pub n_list: Vec<usize>,
    pub dist: EntryDistribution,
    pub alpha: f64,
    pub kappa: f64,
    pub d: f64,
    pub trials: usize,
    pub seed0: u64,
    pub measure: Measures,
    /// Smoothing window `ε`; when absent the asymptotic choice
    /// `ε = (2H v₀)^{2/3}` is used, which needs very large `n`.
    pub epsilon: Option<f64>,
    /// Absolute tolerance of the smoothing-bound quadratures.
    pub tol: f64,
    pub workers: usize,
    pub out_path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            y: 0.5,
            n_list: vec![128, 256, 512, 1024],
            dist: EntryDistribution::Gaussian,
            alpha: 1.0,
            kappa: 2.0,
            d: 32.0,
            trials: 20,
            seed0: 1,
            measure: Measures::default(),
            epsilon: None,
            tol: crate::distance::DEFAULT_QUAD_TOL,
            workers: 1,
            out_path: None,
            format: OutputFormat::Csv,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

impl ExperimentConfig {
    /// Sets one option by name, as used by config files and flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim().replace('-', "_").as_str() {
            "y" => self.y = parse(key, value)?,
            "n" => self.n_list = vec![parse(key, value)?],
            "n_list" => {
                self.n_list = value
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(|t| parse(key, t))
                    .collect::<Result<_>>()?
            }
            "dist" => self.dist = value.trim().parse()?,
            "alpha" => self.alpha = parse(key, value)?,
            "kappa" => self.kappa = parse(key, value)?,
            "d" => self.d = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "seed" | "seed0" => self.seed0 = parse(key, value)?,
            "measure" => self.measure = value.parse()?,
            "epsilon" => self.epsilon = Some(parse(key, value)?),
            "tol" => self.tol = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "out" | "out_path" => self.out_path = Some(PathBuf::from(value.trim())),
            "format" => self.format = value.parse()?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_str(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    /// Sorts and deduplicates `n_list` and checks every field.
    pub fn validate(&mut self) -> Result<()> {
        if !(self.y > 0.0 && self.y <= 1.0) {
            return Err(Error::Config(format!("y = {} must lie in (0, 1]", self.y)));
        }
        self.n_list.sort_unstable();
        self.n_list.dedup();
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list is empty".into()));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 3) {
            return Err(Error::Config(format!("n = {n} must be at least 3")));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.kappa > 0.0 && self.d > 0.0) {
            return Err(Error::Config("alpha, kappa and d must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!(
                "tol = {} must be positive",
                self.tol
            )));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return Err(Error::Config(format!("epsilon = {e} must be positive")));
            }
        }
        Ok(())
    }
}
