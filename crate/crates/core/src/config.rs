//! Run configuration: JSON file contents plus command-line overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{EstimationConfig, Fallback, Mode};
use crate::fuzzy::PartitionMethod;
use crate::similarity::{Aggregation, Combination, SumProductNormalization};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Everything a run depends on. Echoed verbatim into every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub estimation: EstimationConfig,
    /// Drop projects with missing values before estimating or evaluating.
    pub drop_incomplete: bool,
    /// Share one set of partitions across all leave-one-out folds.
    pub shared_partitions: bool,
    /// Score the dataset-mean and crisp k-NN baselines alongside the main method.
    pub baselines: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            estimation: EstimationConfig::default(),
            drop_incomplete: true,
            shared_partitions: false,
            baselines: true,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| match e {
            ConfigError::Invalid(m) => ConfigError::Invalid(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.estimation
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Values given on the command line. Set fields win over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub k_sets: Option<usize>,
    pub partition_method: Option<PartitionMethod>,
    pub overlap: Option<f64>,
    pub aggregation: Option<Aggregation>,
    pub combination: Option<Combination>,
    pub normalization: Option<SumProductNormalization>,
    pub features: Option<Vec<String>>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub knn_k: Option<usize>,
    pub fallback: Option<Fallback>,
    pub size_attribute: Option<String>,
    pub drop_incomplete: Option<bool>,
    pub shared_partitions: Option<bool>,
    pub baselines: Option<bool>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig, ConfigError> {
        let est = &mut cfg.estimation;
        macro_rules! set {
            ($src:ident => $dst:expr) => {
                if let Some(v) = self.$src.clone() {
                    $dst = v;
                }
            };
        }
        set!(mode => est.mode);
        set!(k_sets => est.fuzzy.k_sets);
        set!(partition_method => est.fuzzy.method);
        set!(overlap => est.fuzzy.overlap);
        set!(aggregation => est.similarity.aggregation);
        set!(combination => est.similarity.combination);
        set!(normalization => est.similarity.normalization);
        set!(a => est.a);
        set!(b => est.b);
        set!(knn_k => est.knn_k);
        set!(fallback => est.fallback);
        set!(drop_incomplete => cfg.drop_incomplete);
        set!(shared_partitions => cfg.shared_partitions);
        set!(baselines => cfg.baselines);
        if let Some(f) = &self.features {
            cfg.estimation.similarity.features = Some(f.clone());
        }
        if let Some(s) = &self.size_attribute {
            cfg.estimation.size_attribute = Some(s.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
