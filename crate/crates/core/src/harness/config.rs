use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::diagnostics::DEFAULT_ETAS;
use crate::error::{Error, Result};
use crate::ofab::OfabConfig;
use crate::variational::{Algorithm, InitStrategy, OptimizerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Qaoa,
    AbQaoa,
    Ofab,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Qaoa => "qaoa",
            Method::AbQaoa => "ab_qaoa",
            Method::Ofab => "ofab",
        }
    }

    pub fn variational(self) -> Option<Algorithm> {
        match self {
            Method::Qaoa => Some(Algorithm::Qaoa),
            Method::AbQaoa => Some(Algorithm::AbQaoa),
            Method::Ofab => None,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qaoa" => Ok(Method::Qaoa),
            "ab_qaoa" | "abqaoa" => Ok(Method::AbQaoa),
            "ofab" => Ok(Method::Ofab),
            _ => Err(Error::Config(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// How an instance counts as solved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    /// Max-SAT: infidelity at most [`ExperimentConfig::if_threshold`].
    #[default]
    Max,
    /// SAT/UNSAT: the thresholded verdict matches the oracle.
    Decision,
}

mod defaults {
    use super::*;

    pub fn n() -> Vec<usize> {
        vec![10]
    }
    pub fn alpha() -> Vec<f64> {
        vec![0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.2, 1.4]
    }
    pub fn levels() -> Vec<usize> {
        vec![4]
    }
    pub fn algorithms() -> Vec<Method> {
        vec![Method::Qaoa, Method::AbQaoa]
    }
    pub fn instances() -> usize {
        100
    }
    pub fn r_grid() -> Vec<usize> {
        vec![1, 2, 5, 10, 15, 20, 25, 30]
    }
    pub fn level_cap() -> usize {
        64
    }
    pub fn if_threshold() -> f64 {
        0.1
    }
    pub fn etas() -> Vec<f64> {
        DEFAULT_ETAS.to_vec()
    }
    pub fn output() -> PathBuf {
        PathBuf::from("out")
    }
}

/// One experiment. Everything but `seed` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "defaults::n")]
    pub n: Vec<usize>,
    #[serde(default = "defaults::alpha")]
    pub alpha: Vec<f64>,
    #[serde(default = "defaults::levels")]
    pub levels: Vec<usize>,
    #[serde(default = "defaults::algorithms")]
    pub algorithms: Vec<Method>,
    #[serde(default)]
    pub init: InitStrategy,
    #[serde(default = "defaults::instances")]
    pub instances: usize,
    #[serde(default)]
    pub problem: Problem,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    /// `p` is taken from `levels`.
    #[serde(default)]
    pub ofab: OfabConfig,
    #[serde(default = "defaults::r_grid")]
    pub r_grid: Vec<usize>,
    /// Level recorded when the levels protocol never succeeds.
    #[serde(default = "defaults::level_cap")]
    pub level_cap: usize,
    #[serde(default = "defaults::if_threshold")]
    pub if_threshold: f64,
    #[serde(default = "defaults::etas")]
    pub etas: Vec<f64>,
    #[serde(default = "defaults::output")]
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn with_seed(seed: u64) -> Self {
        serde_json::from_value(serde_json::json!({ "seed": seed })).expect("defaults deserialize")
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("n", self.n.is_empty()),
            ("alpha", self.alpha.is_empty()),
            ("levels", self.levels.is_empty()),
            ("algorithms", self.algorithms.is_empty()),
            ("r_grid", self.r_grid.is_empty()),
            ("etas", self.etas.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Config(format!("{name} must not be empty")));
        }
        if self.instances == 0 {
            return Err(Error::Config("instances must be >= 1".into()));
        }
        if self.n.iter().any(|&n| n < 3) {
            return Err(Error::Config("every n must be >= 3".into()));
        }
        if self.alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::Config("alpha values must be finite and non-negative".into()));
        }
        if self.levels.contains(&0) {
            return Err(Error::Config("levels must be >= 1".into()));
        }
        if self.r_grid.contains(&0) || self.r_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("r_grid must be positive and strictly increasing".into()));
        }
        if self.etas.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            return Err(Error::Config("etas must lie in (0, 1]".into()));
        }
        self.optimizer.validate()?;
        OfabConfig { p: 1, ..self.ofab.clone() }.validate()
    }

    /// Loads `path` (if any), applies `overrides` on top of the JSON, and
    /// validates. Override keys are top-level fields; nested objects merge.
    pub fn load(path: Option<&Path>, overrides: Value) -> Result<Self> {
        let mut base = match path {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            None => Value::Object(Default::default()),
        };
        merge(&mut base, overrides);
        let cfg: Self = serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o,
    }
}
