//! Experiment configuration: a flat `key = value` file plus overrides.
//!
//! ```text
//! # Gamma = 5 at N = 8
//! model = rmte
//! N = 8
//! L = 2
//! epsilon = 0.3446
//! dist = uniform_pi
//! moments = 1,2
//! ```
//!
//! Keys match the command-line flags. Later assignments win, so command-line
//! overrides are applied by inserting them after the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensemble::{total_dim, DEFAULT_DIM_BUDGET};
use crate::error::{Result, SffError};
use crate::estimator::Smoothing;
use crate::random::PhaseDistribution;
use crate::rotor::{DEFAULT_K1, DEFAULT_K2};

pub const DEFAULT_REALIZATIONS: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Rmte,
    Rotors,
}

impl FromStr for Model {
    type Err = SffError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rmte" => Ok(Model::Rmte),
            "rotors" => Ok(Model::Rotors),
            other => Err(SffError::Config(format!(
                "unknown model {other:?} (expected rmte or rotors)"
            ))),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Rmte => "rmte",
            Model::Rotors => "rotors",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = SffError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(SffError::Config(format!(
                "unknown output format {other:?} (expected csv or json)"
            ))),
        }
    }
}

/// A fully resolved experiment. Every default is filled in, so the
/// serialized form reruns the same experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: Model,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: u32,
    /// Coupling strength of the random-matrix model.
    pub epsilon: Option<f64>,
    /// Coupling strength of the rotors.
    pub gamma: Option<f64>,
    pub dist: PhaseDistribution,
    pub realizations: u64,
    pub tmax: usize,
    pub moments: Vec<u32>,
    pub master_seed: u64,
    pub smoothing: Smoothing,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub perturbative: bool,
    /// Worker threads; 0 uses every available core. Does not affect results.
    pub workers: usize,
    pub k1: f64,
    pub k2: f64,
}

impl ExperimentConfig {
    /// Random-matrix experiment with defaults for everything else.
    pub fn rmte(n: usize, l: u32, epsilon: f64, dist: PhaseDistribution) -> Result<Self> {
        let tmax = 3 * total_dim(n, l, DEFAULT_DIM_BUDGET)?;
        let cfg = Self {
            model: Model::Rmte,
            n,
            l,
            epsilon: Some(epsilon),
            gamma: None,
            dist,
            realizations: DEFAULT_REALIZATIONS,
            tmax,
            moments: vec![1],
            master_seed: 0,
            smoothing: Smoothing::default(),
            out: PathBuf::from("results"),
            format: OutputFormat::Csv,
            perturbative: false,
            workers: 0,
            k1: DEFAULT_K1,
            k2: DEFAULT_K2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Coupled kicked rotors with defaults for everything else.
    pub fn rotors(n: usize, gamma: f64) -> Result<Self> {
        let mut cfg = Self::rmte(n, 2, 0.0, PhaseDistribution::CosineOfUniform)?;
        cfg.model = Model::Rotors;
        cfg.epsilon = None;
        cfg.gamma = Some(gamma);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.n.pow(self.l)
    }

    /// Builds a configuration from `key = value` pairs.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let get = |key: &str| pairs.get(key).map(|s| s.trim());
        for key in pairs.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(SffError::Config(format!("unknown configuration key {key:?}")));
            }
        }
        let model = match get("model") {
            Some(s) => s.parse()?,
            None => Model::Rmte,
        };
        let n: usize = required(get("N"), "N")?;
        let l: u32 = match (model, get("L")) {
            (_, Some(s)) => parse(s, "L")?,
            (Model::Rotors, None) => 2,
            (Model::Rmte, None) => {
                return Err(SffError::Config("missing required key \"L\"".into()));
            }
        };
        let dist = match (model, get("dist")) {
            (_, Some(s)) => s.parse()?,
            (Model::Rmte, None) => PhaseDistribution::UniformPi,
            (Model::Rotors, None) => PhaseDistribution::CosineOfUniform,
        };
        let dim = total_dim(n, l, DEFAULT_DIM_BUDGET)?;
        let cfg = Self {
            model,
            n,
            l,
            epsilon: get("epsilon").map(|s| parse(s, "epsilon")).transpose()?,
            gamma: get("gamma").map(|s| parse(s, "gamma")).transpose()?,
            dist,
            realizations: optional(get("realizations"), "realizations", DEFAULT_REALIZATIONS)?,
            tmax: optional(get("tmax"), "tmax", 3 * dim)?,
            moments: match get("moments") {
                Some(s) => parse_moments(s)?,
                None => vec![1],
            },
            master_seed: optional(get("seed"), "seed", 0)?,
            smoothing: match get("window") {
                Some(s) => s.parse()?,
                None => Smoothing::default(),
            },
            out: PathBuf::from(get("out").unwrap_or("results")),
            format: match get("format") {
                Some(s) => s.parse()?,
                None => OutputFormat::Csv,
            },
            perturbative: optional(get("perturbative"), "perturbative", false)?,
            workers: optional(get("workers"), "workers", 0)?,
            k1: optional(get("k1"), "k1", DEFAULT_K1)?,
            k2: optional(get("k2"), "k2", DEFAULT_K2)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a configuration file and applies `overrides` on top.
    pub fn from_file(path: &Path, overrides: &BTreeMap<String, String>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| SffError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut pairs = parse_pairs(&text)?;
        pairs.extend(overrides.iter().map(|(k, v)| (k.clone(), v.clone())));
        Self::from_pairs(&pairs)
    }

    pub fn validate(&self) -> Result<()> {
        let dim = total_dim(self.n, self.l, DEFAULT_DIM_BUDGET)?;
        if self.n < 2 {
            return Err(SffError::InvalidDimension(format!(
                "N must be >= 2, got {}",
                self.n
            )));
        }
        if self.l == 0 {
            return Err(SffError::InvalidDimension("L must be >= 1".into()));
        }
        match self.model {
            Model::Rmte => {
                if self.gamma.is_some() {
                    return Err(SffError::Config(
                        "model rmte takes epsilon, not gamma".into(),
                    ));
                }
                match self.epsilon {
                    None => return Err(SffError::Config("model rmte requires epsilon".into())),
                    Some(e) if !e.is_finite() || e < 0.0 => {
                        return Err(SffError::Config(format!(
                            "epsilon must be finite and >= 0, got {e}"
                        )));
                    }
                    _ => {}
                }
            }
            Model::Rotors => {
                if self.epsilon.is_some() {
                    return Err(SffError::Config(
                        "model rotors takes gamma, not epsilon".into(),
                    ));
                }
                match self.gamma {
                    None => return Err(SffError::Config("model rotors requires gamma".into())),
                    Some(g) if !g.is_finite() || g < 0.0 => {
                        return Err(SffError::Config(format!(
                            "gamma must be finite and >= 0, got {g}"
                        )));
                    }
                    _ => {}
                }
                if self.l != 2 {
                    return Err(SffError::Config(format!(
                        "model rotors has L = 2, got {}",
                        self.l
                    )));
                }
                if self.dist != PhaseDistribution::CosineOfUniform {
                    return Err(SffError::Config(format!(
                        "model rotors implies dist = cosine_of_uniform, got {}",
                        self.dist
                    )));
                }
                for (name, k) in [("k1", self.k1), ("k2", self.k2)] {
                    if !k.is_finite() {
                        return Err(SffError::Config(format!("{name} must be finite, got {k}")));
                    }
                }
            }
        }
        if self.realizations < 2 {
            return Err(SffError::Config(format!(
                "realizations must be >= 2, got {}",
                self.realizations
            )));
        }
        if self.tmax == 0 {
            return Err(SffError::Config("tmax must be >= 1".into()));
        }
        if self.moments.is_empty() {
            return Err(SffError::Config("at least one moment order is required".into()));
        }
        if self.moments.contains(&0) {
            return Err(SffError::Config("moment orders must be >= 1".into()));
        }
        self.smoothing.validate(self.tmax)?;
        debug_assert_eq!(dim, self.dim());
        Ok(())
    }
}

/// Accepted keys, in the order they are documented.
pub const KEYS: &[&str] = &[
    "model",
    "N",
    "L",
    "epsilon",
    "gamma",
    "dist",
    "realizations",
    "tmax",
    "moments",
    "seed",
    "window",
    "out",
    "format",
    "perturbative",
    "workers",
    "k1",
    "k2",
];

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut pairs = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            SffError::Config(format!("line {}: expected key = value, got {line:?}", i + 1))
        })?;
        pairs.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(pairs)
}

fn parse_moments(s: &str) -> Result<Vec<u32>> {
    let mut moments = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| parse::<u32>(p, "moments"))
        .collect::<Result<Vec<_>>>()?;
    moments.sort_unstable();
    moments.dedup();
    Ok(moments)
}

fn parse<T: FromStr>(s: &str, key: &str) -> Result<T> {
    s.parse()
        .map_err(|_| SffError::Config(format!("bad value {s:?} for {key}")))
}

fn required<T: FromStr>(s: Option<&str>, key: &str) -> Result<T> {
    match s {
        Some(s) => parse(s, key),
        None => Err(SffError::Config(format!("missing required key {key:?}"))),
    }
}

fn optional<T: FromStr>(s: Option<&str>, key: &str, default: T) -> Result<T> {
    s.map_or(Ok(default), |s| parse(s, key))
}
