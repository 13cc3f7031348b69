use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algorithms::Algorithm;
use crate::error::{Error, Result};
use crate::topology::Family;
use crate::tuning::Criterion;

/// Step-size grid used when `eta = "grid"`: {1, 0.75, 0.5, 0.25} per decade
/// from 0.1 down to 0.0001.
pub const ETA_GRID: [f64; 13] = [
    0.1, 0.075, 0.05, 0.025, 0.01, 0.0075, 0.005, 0.0025, 0.001, 0.00075, 0.0005, 0.00025, 0.0001,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Value(f64),
    Word(String),
}

impl EtaSpec {
    pub fn grid() -> Self {
        EtaSpec::Word("grid".into())
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            EtaSpec::Value(v) if *v > 0.0 && v.is_finite() => Ok(vec![*v]),
            EtaSpec::Value(v) => Err(Error::Config(format!("eta must be positive, got {v}"))),
            EtaSpec::Word(w) if w == "grid" => Ok(ETA_GRID.to_vec()),
            EtaSpec::Word(w) => w
                .parse::<f64>()
                .map_err(|_| {
                    Error::Config(format!(
                        "eta must be a positive number or `grid`, got `{w}`"
                    ))
                })
                .and_then(|v| EtaSpec::Value(v).values()),
        }
    }
}

impl std::str::FromStr for EtaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let spec = match s.parse::<f64>() {
            Ok(v) => EtaSpec::Value(v),
            Err(_) => EtaSpec::Word(s.to_string()),
        };
        spec.values()?;
        Ok(spec)
    }
}

/// One experiment. Field names match the keys of the flat `key = value`
/// config file and the long CLI flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub n: usize,
    pub d: usize,
    #[serde(rename = "T", alias = "t")]
    pub t: usize,
    #[serde(default)]
    pub k: Option<usize>,
    pub topology: Family,
    pub sigma2: f64,
    pub zeta2: f64,
    pub eta: EtaSpec,
    pub seed: u64,
    #[serde(default, alias = "target-error")]
    pub target_error: Option<f64>,
    #[serde(default)]
    pub criterion: Criterion,
    /// Every coordinate of the shared initial parameter.
    #[serde(default = "default_init")]
    pub init: f64,
    /// Horizon of the k-search branches; defaults to `T`.
    #[serde(default, alias = "search-t")]
    pub search_t: Option<usize>,
    /// Number of consecutive seeds starting at `seed`.
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// Worker threads for independent runs; 0 uses all cores.
    #[serde(default)]
    pub jobs: usize,
}

fn default_init() -> f64 {
    1.0
}

fn default_seeds() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algorithm: Algorithm::Teleport,
            n: 100,
            d: 50,
            t: 1000,
            k: None,
            topology: Family::Ring,
            sigma2: 0.0,
            zeta2: 0.0,
            eta: EtaSpec::grid(),
            seed: 0,
            target_error: Some(1e-3),
            criterion: Criterion::default(),
            init: default_init(),
            search_t: None,
            seeds: 1,
            jobs: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn etas(&self) -> Result<Vec<f64>> {
        self.eta.values()
    }

    pub fn search_horizon(&self) -> usize {
        self.search_t.unwrap_or(self.t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.t == 0 {
            return Err(Error::Config("n, d and T must be positive".into()));
        }
        for (name, v) in [("sigma2", self.sigma2), ("zeta2", self.zeta2)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "{name} must be a finite nonnegative number, got {v}"
                )));
            }
        }
        if !self.init.is_finite() {
            return Err(Error::Config("init must be finite".into()));
        }
        self.etas()?;
        if let Some(target) = self.target_error {
            if target.is_nan() || target <= 0.0 {
                return Err(Error::Config(format!(
                    "target_error must be positive, got {target}"
                )));
            }
        }
        let needs_k = !matches!(self.algorithm, Algorithm::Dsgd | Algorithm::SearchK);
        match self.k {
            None if needs_k => {
                return Err(Error::Config(format!(
                    "algorithm {} requires k",
                    self.algorithm
                )));
            }
            Some(k) if k == 0 || k > self.n => {
                return Err(Error::Config(format!(
                    "k must lie in 1..={}, got {k}",
                    self.n
                )));
            }
            _ => {}
        }
        let topology_size = match self.algorithm {
            Algorithm::Teleport | Algorithm::TeleportOverlap => self.k,
            Algorithm::Dsgd | Algorithm::ClientSampling => Some(self.n),
            Algorithm::SearchK => None,
        };
        if let Some(size) = topology_size {
            if !self.topology.supports(size) {
                return Err(Error::Config(format!(
                    "{} topology cannot have {size} nodes",
                    self.topology
                )));
            }
        }
        if self.algorithm == Algorithm::ClientSampling && !self.topology.is_symmetric() {
            return Err(Error::Config(
                "client sampling needs a symmetric topology".into(),
            ));
        }
        if self.algorithm == Algorithm::SearchK && self.topology == Family::Torus {
            return Err(Error::Config(
                "search-k candidates are powers of two; torus needs square sizes".into(),
            ));
        }
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        if self.search_t == Some(0) {
            return Err(Error::Config("search_t must be positive".into()));
        }
        Ok(())
    }
}
