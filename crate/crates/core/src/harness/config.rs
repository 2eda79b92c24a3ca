use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::allocation::FilterKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    TheoryVsSim,
    UtilityVsL,
    InversePowerVsAlpha,
    OrderingGainVsL,
    PropertySuite,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::TheoryVsSim,
        Experiment::UtilityVsL,
        Experiment::InversePowerVsAlpha,
        Experiment::OrderingGainVsL,
        Experiment::PropertySuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::TheoryVsSim => "theory-vs-sim",
            Experiment::UtilityVsL => "utility-vs-L",
            Experiment::InversePowerVsAlpha => "inverse-power-vs-alpha",
            Experiment::OrderingGainVsL => "ordering-gain-vs-L",
            Experiment::PropertySuite => "property-suite",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                Error::Usage(format!("unknown experiment '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// How SIC decoding orders are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingMode {
    /// Uniform permutation broadcast as an arbitrator signal.
    Random,
    Decreasing,
    Increasing,
}

impl OrderingMode {
    pub fn name(self) -> &'static str {
        match self {
            OrderingMode::Random => "random",
            OrderingMode::Decreasing => "decreasing",
            OrderingMode::Increasing => "increasing",
        }
    }
}

impl FromStr for OrderingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(OrderingMode::Random),
            "decreasing" => Ok(OrderingMode::Decreasing),
            "increasing" => Ok(OrderingMode::Increasing),
            _ => Err(Error::Usage(format!("unknown ordering '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    /// One JSON object per line.
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" | "jsonl" => Ok(OutputFormat::Json),
            _ => Err(Error::Usage(format!("unknown format '{s}'"))),
        }
    }
}

/// Everything an experiment run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub k: usize,
    pub n: usize,
    pub l: Vec<usize>,
    pub sigma2: f64,
    pub m: u32,
    pub trials: usize,
    pub seed: u64,
    pub filters: Vec<FilterKind>,
    pub ordering: OrderingMode,
    pub alpha_sweep: Option<Vec<f64>>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
    pub pmax: f64,
    /// Mean total channel energy `E[E_k]`.
    pub rho: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::TheoryVsSim,
            k: 32,
            n: 256,
            l: vec![1, 2, 4, 8],
            sigma2: 1e-10,
            m: 100,
            trials: 1000,
            seed: 0,
            filters: FilterKind::ALL.to_vec(),
            ordering: OrderingMode::Random,
            alpha_sweep: None,
            output: None,
            format: OutputFormat::Csv,
            workers: None,
            pmax: f64::INFINITY,
            rho: 1.0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Usage(format!("bad value '{value}' for {key}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

/// Parses `mf,mmse` or `all`.
pub fn parse_filters(value: &str) -> Result<Vec<FilterKind>> {
    if value.trim().eq_ignore_ascii_case("all") {
        return Ok(FilterKind::ALL.to_vec());
    }
    let mut out: Vec<FilterKind> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(FilterKind::from_str)
        .collect::<Result<_>>()?;
    out.dedup();
    Ok(out)
}

impl ExperimentConfig {
    /// Sets one field from its key. Keys are the long CLI flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim().trim_start_matches("--");
        match k {
            "experiment" => self.experiment = value.parse()?,
            "K" | "k" => self.k = parse(k, value)?,
            "N" | "n" => self.n = parse(k, value)?,
            "L" | "l" => self.l = parse_list(k, value)?,
            "sigma2" => self.sigma2 = parse(k, value)?,
            "M" | "m" => self.m = parse(k, value)?,
            "trials" => self.trials = parse(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "filter" => self.filters = parse_filters(value)?,
            "ordering" => self.ordering = value.parse()?,
            "alpha-sweep" | "alpha_sweep" => self.alpha_sweep = Some(parse_list(k, value)?),
            "output" => self.output = Some(PathBuf::from(value.trim())),
            "format" => self.format = value.parse()?,
            "workers" => self.workers = Some(parse(k, value)?),
            "pmax" => self.pmax = parse(k, value)?,
            "rho" => self.rho = parse(k, value)?,
            _ => return Err(Error::Usage(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("line {}: expected key = value", i + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn apply_kv_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_kv(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(Error::Usage(m));
        if self.k == 0 || self.n == 0 {
            return usage("K and N must be positive".into());
        }
        if self.trials == 0 {
            return usage("trials must be at least 1".into());
        }
        if self.l.is_empty() || self.l.contains(&0) {
            return usage("L needs at least one positive path count".into());
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return usage(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        if self.m < 2 {
            return usage(format!("M must be at least 2, got {}", self.m));
        }
        if self.filters.is_empty() {
            return usage("no filter selected".into());
        }
        if !(self.pmax > 0.0) {
            return usage(format!("pmax must be positive, got {}", self.pmax));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return usage(format!("rho must be positive, got {}", self.rho));
        }
        if self.workers == Some(0) {
            return usage("workers must be at least 1".into());
        }
        if let Some(s) = &self.alpha_sweep {
            if s.is_empty() || s.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
                return usage("alpha sweep needs positive loads".into());
            }
        }
        Ok(())
    }

    /// Load `K/N`.
    pub fn alpha(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// The configured sweep, or `0.02, 0.04, ..., 0.30`.
    pub fn alpha_values(&self) -> Vec<f64> {
        self.alpha_sweep
            .clone()
            .unwrap_or_else(|| (1..=15).map(|i| 0.02 * i as f64).collect())
    }
}
