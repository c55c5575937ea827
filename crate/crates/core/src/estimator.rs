//! Effort estimators: similarity-weighted fuzzy analogy, the COCOMO-style
//! adjusted formula, and two baselines (crisp k-NN analogy, dataset mean).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{canonical_rating, AttributeKind, DataError, Dataset, Value};
use crate::fuzzy::{DatasetPartitions, FuzzyConfig, FuzzyError};
use crate::similarity::{Comparator, Profile, SimilarityConfig, SimilarityError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("dataset has no projects")]
    EmptyDataset,
    #[error("every historical project has zero similarity to the query")]
    ZeroSimilarity,
    #[error("invalid estimator config: {0}")]
    InvalidConfig(String),
    #[error("size must be positive, got {0}")]
    NonPositiveSize(f64),
    #[error("effort multipliers must be positive")]
    NonPositiveMultiplier,
    #[error("no numeric size attribute found (set size_attribute)")]
    NoSizeAttribute,
    #[error("k = {k} exceeds the {n} available projects")]
    KTooLarge { k: usize, n: usize },
    #[error("query has no value for feature '{0}'")]
    MissingValue(String),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    FuzzyAnalogy,
    CocomoAdjusted,
    CrispKnn,
    DatasetMean,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "fuzzy_analogy" | "fuzzy" => Ok(Mode::FuzzyAnalogy),
            "cocomo_adjusted" | "cocomo" => Ok(Mode::CocomoAdjusted),
            "crisp_knn" | "knn" => Ok(Mode::CrispKnn),
            "dataset_mean" | "mean" => Ok(Mode::DatasetMean),
            _ => Err(format!(
                "unknown mode '{s}' (expected fuzzy-analogy, cocomo-adjusted, crisp-knn or dataset-mean)"
            )),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::FuzzyAnalogy => "fuzzy-analogy",
            Mode::CocomoAdjusted => "cocomo-adjusted",
            Mode::CrispKnn => "crisp-knn",
            Mode::DatasetMean => "dataset-mean",
        })
    }
}

/// What to do when every case has zero similarity to the query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    #[default]
    DatasetMean,
    Error,
}

impl FromStr for Fallback {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "dataset_mean" | "mean" => Ok(Fallback::DatasetMean),
            "error" => Ok(Fallback::Error),
            _ => Err(format!("unknown fallback '{s}' (expected dataset-mean or error)")),
        }
    }
}

/// Rating → effort multiplier per cost driver. Ratings absent for a driver count as 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierTable {
    #[serde(default)]
    pub source: String,
    pub multipliers: BTreeMap<String, BTreeMap<String, f64>>,
}

const BUILTIN_MULTIPLIERS: &str = include_str!("../data/cocomo_multipliers.json");

impl MultiplierTable {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_MULTIPLIERS).expect("bundled multiplier table is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, EstimateError> {
        let table: MultiplierTable =
            serde_json::from_str(text).map_err(|e| EstimateError::InvalidConfig(format!("multiplier table: {e}")))?;
        if table.multipliers.values().flat_map(|m| m.values()).any(|v| !(*v > 0.0)) {
            return Err(EstimateError::NonPositiveMultiplier);
        }
        Ok(table)
    }

    /// Multipliers for every rated cost driver present in `values`.
    pub fn effort_multipliers(&self, dataset: &Dataset, values: &[Value]) -> Vec<f64> {
        let mut out = Vec::new();
        for (attr, v) in dataset.schema().iter().zip(values) {
            let (AttributeKind::Categorical { terms }, Value::Categorical(i)) = (&attr.kind, v) else {
                continue;
            };
            let Some(driver) = self.multipliers.get(&attr.name.to_ascii_lowercase()) else {
                continue;
            };
            let label = &terms[*i];
            let rating = canonical_rating(label).unwrap_or(label.as_str());
            out.push(driver.get(rating).copied().unwrap_or(1.0));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationConfig {
    pub mode: Mode,
    pub fuzzy: FuzzyConfig,
    pub similarity: SimilarityConfig,
    /// Multiplicative constant of the adjusted formula.
    #[serde(rename = "A")]
    pub a: f64,
    /// Exponent base of the adjusted formula.
    #[serde(rename = "B")]
    pub b: f64,
    /// Neighbours for crisp k-NN, and analogs whose distances feed the adjusted formula.
    pub knn_k: usize,
    pub fallback: Fallback,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size_attribute: Option<String>,
    /// `None` uses the bundled COCOMO table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multipliers: Option<MultiplierTable>,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            mode: Mode::FuzzyAnalogy,
            fuzzy: FuzzyConfig::default(),
            similarity: SimilarityConfig::default(),
            a: 2.94,
            b: 0.91,
            knn_k: 3,
            fallback: Fallback::DatasetMean,
            size_attribute: None,
            multipliers: None,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<(), EstimateError> {
        let bad = |m: String| Err(EstimateError::InvalidConfig(m));
        if !(self.a > 0.0) || !self.a.is_finite() {
            return bad(format!("A must be positive, got {}", self.a));
        }
        if !(self.b > 0.0) || !self.b.is_finite() {
            return bad(format!("B must be positive, got {}", self.b));
        }
        if self.knn_k < 1 {
            return bad("knn_k must be at least 1".into());
        }
        if self.fuzzy.k_sets < 2 {
            return bad(format!("k_sets must be at least 2, got {}", self.fuzzy.k_sets));
        }
        if !(self.fuzzy.overlap > 0.0) || !self.fuzzy.overlap.is_finite() {
            return bad(format!("overlap must be positive, got {}", self.fuzzy.overlap));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CocomoInputs {
    size: f64,
    distances: Vec<f64>,
    effort_multipliers: Vec<f64>,
}

impl CocomoInputs {
    pub fn new(size: f64, distances: Vec<f64>, effort_multipliers: Vec<f64>) -> Result<Self, EstimateError> {
        if !(size > 0.0) || !size.is_finite() {
            return Err(EstimateError::NonPositiveSize(size));
        }
        if effort_multipliers.iter().any(|m| !(*m > 0.0)) {
            return Err(EstimateError::NonPositiveMultiplier);
        }
        Ok(CocomoInputs {
            size,
            distances,
            effort_multipliers,
        })
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn effort_multipliers(&self) -> &[f64] {
        &self.effort_multipliers
    }
}

/// `A · size^(B + 0.01·Σd) · ΠEM`; an empty multiplier list contributes 1.
pub fn estimate_cocomo_adjusted(inputs: &CocomoInputs, a: f64, b: f64) -> f64 {
    let distance_sum: f64 = inputs.distances.iter().sum();
    let multiplier: f64 = inputs.effort_multipliers.iter().product();
    a * inputs.size.powf(b + 0.01 * distance_sum) * multiplier
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub id: String,
    pub similarity: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub mode: Mode,
    /// Dataset order.
    pub contributions: Vec<Contribution>,
    /// True when the zero-similarity fallback produced the value.
    #[serde(default)]
    pub fallback_used: bool,
}

impl Estimate {
    /// Contributions sorted by descending weight (ties keep dataset order).
    pub fn top(&self, n: usize) -> Vec<&Contribution> {
        let mut sorted: Vec<&Contribution> = self.contributions.iter().collect();
        sorted.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        sorted.truncate(n);
        sorted
    }
}

/// Sum in a canonical order so the result does not depend on input order.
fn canonical_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

fn mean(values: &[f64]) -> Result<f64, EstimateError> {
    if values.is_empty() {
        return Err(EstimateError::EmptyDataset);
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((canonical_sum(values.to_vec()) / values.len() as f64).clamp(lo, hi))
}

/// Similarity-weighted case adaptation. Returns the estimate, the normalized
/// weights, and whether the fallback fired.
pub fn adapt(
    similarities: &[f64],
    efforts: &[f64],
    fallback: Fallback,
) -> Result<(f64, Vec<f64>, bool), EstimateError> {
    assert_eq!(similarities.len(), efforts.len());
    if efforts.is_empty() {
        return Err(EstimateError::EmptyDataset);
    }
    let total = canonical_sum(similarities.iter().map(|s| s.max(0.0)).collect());
    if !(total > 0.0) {
        return match fallback {
            Fallback::Error => Err(EstimateError::ZeroSimilarity),
            Fallback::DatasetMean => {
                let w = 1.0 / efforts.len() as f64;
                Ok((mean(efforts)?, vec![w; efforts.len()], true))
            }
        };
    }
    let weights: Vec<f64> = similarities.iter().map(|s| s.max(0.0) / total).collect();
    let mut pairs: Vec<(f64, f64)> = weights.iter().copied().zip(efforts.iter().copied()).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let value: f64 = pairs.iter().map(|(w, e)| w * e).sum();
    let contributing = pairs.iter().filter(|(w, _)| *w > 0.0).map(|(_, e)| *e);
    let lo = contributing.clone().fold(f64::INFINITY, f64::min);
    let hi = contributing.fold(f64::NEG_INFINITY, f64::max);
    Ok((value.clamp(lo, hi), weights, false))
}

pub fn estimate_dataset_mean(dataset: &Dataset) -> Result<f64, EstimateError> {
    mean(&dataset.efforts().collect::<Vec<_>>())
}

/// Fuzzy analogy against pre-built partitions: every project contributes in
/// proportion to its similarity with the query.
pub fn estimate_fuzzy_analogy(
    query: &[Value],
    dataset: &Dataset,
    partitions: &DatasetPartitions,
    config: &EstimationConfig,
) -> Result<Estimate, EstimateError> {
    let est = Estimator::fit_with_partitions(
        dataset,
        &EstimationConfig {
            mode: Mode::FuzzyAnalogy,
            ..config.clone()
        },
        partitions.clone(),
    )?;
    est.estimate("query", query)
}

/// Classical analogy over every attribute: exact match for categorical values,
/// `1 - |x - y| / range` for numeric ones, mean effort of the `k` best.
pub fn estimate_crisp_knn(query: &[Value], dataset: &Dataset, k: usize) -> Result<Estimate, EstimateError> {
    let config = EstimationConfig {
        mode: Mode::CrispKnn,
        knn_k: k,
        ..EstimationConfig::default()
    };
    Estimator::fit(dataset, &config)?.estimate("query", query)
}

/// A fitted estimator: owns its case base and any precomputed fuzzy profiles.
#[derive(Debug, Clone)]
pub struct Estimator {
    dataset: Dataset,
    config: EstimationConfig,
    comparator: Option<Comparator>,
    profiles: Vec<Profile>,
    features: Vec<usize>,
    ranges: Vec<Option<(f64, f64)>>,
    size_attr: Option<usize>,
    multipliers: MultiplierTable,
}

impl Estimator {
    /// Builds partitions from `dataset` itself, then fits.
    pub fn fit(dataset: &Dataset, config: &EstimationConfig) -> Result<Self, EstimateError> {
        config.validate()?;
        if dataset.is_empty() {
            return Err(EstimateError::EmptyDataset);
        }
        let partitions = match config.mode {
            Mode::FuzzyAnalogy | Mode::CocomoAdjusted => Some(DatasetPartitions::build(dataset, &config.fuzzy)?),
            Mode::CrispKnn | Mode::DatasetMean => None,
        };
        Self::fit_inner(dataset, config, partitions)
    }

    /// Fits against externally supplied partitions (e.g. shared across folds).
    pub fn fit_with_partitions(
        dataset: &Dataset,
        config: &EstimationConfig,
        partitions: DatasetPartitions,
    ) -> Result<Self, EstimateError> {
        config.validate()?;
        if dataset.is_empty() {
            return Err(EstimateError::EmptyDataset);
        }
        if partitions.partitions.len() != dataset.schema().len() {
            return Err(SimilarityError::SchemaMismatch {
                partitions: partitions.partitions.len(),
                values: dataset.schema().len(),
            }
            .into());
        }
        Self::fit_inner(dataset, config, Some(partitions))
    }

    fn fit_inner(
        dataset: &Dataset,
        config: &EstimationConfig,
        partitions: Option<DatasetPartitions>,
    ) -> Result<Self, EstimateError> {
        let names: Vec<&str> = dataset.schema().iter().map(|a| a.name.as_str()).collect();
        let features = config.similarity.feature_indices(&names)?;

        let (comparator, profiles) = match partitions {
            Some(parts) => {
                let cmp = Comparator::new(parts, config.similarity.clone())?;
                let profiles = dataset
                    .projects()
                    .iter()
                    .map(|p| cmp.profile(&p.id, &p.values))
                    .collect::<Result<Vec<_>, _>>()?;
                (Some(cmp), profiles)
            }
            None => (None, Vec::new()),
        };

        let mut ranges = vec![None; names.len()];
        if config.mode == Mode::CrispKnn {
            for &j in &features {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for p in dataset.projects() {
                    match p.values[j] {
                        Value::Numeric(x) => {
                            lo = lo.min(x);
                            hi = hi.max(x);
                        }
                        Value::Missing => {
                            return Err(SimilarityError::MissingValue {
                                project: p.id.clone(),
                                feature: names[j].to_string(),
                            }
                            .into())
                        }
                        Value::Categorical(_) => {}
                    }
                }
                if lo <= hi {
                    ranges[j] = Some((lo, hi));
                }
            }
            if config.knn_k > dataset.len() {
                return Err(EstimateError::KTooLarge {
                    k: config.knn_k,
                    n: dataset.len(),
                });
            }
        }

        let size_attr = if config.mode == Mode::CocomoAdjusted {
            let is_numeric = |j: &usize| !dataset.schema()[*j].is_categorical();
            let found = match &config.size_attribute {
                Some(name) => dataset.attribute_index(name).filter(is_numeric),
                None => ["loc", "kloc", "equivphyskloc", "size"].iter().find_map(|cand| {
                    names
                        .iter()
                        .position(|n| n.eq_ignore_ascii_case(cand))
                        .filter(is_numeric)
                }),
            };
            Some(found.ok_or(EstimateError::NoSizeAttribute)?)
        } else {
            None
        };

        Ok(Estimator {
            dataset: dataset.clone(),
            multipliers: config.multipliers.clone().unwrap_or_else(MultiplierTable::builtin),
            config: config.clone(),
            comparator,
            profiles,
            features,
            ranges,
            size_attr,
        })
    }

    pub fn config(&self) -> &EstimationConfig {
        &self.config
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn partitions(&self) -> Option<&DatasetPartitions> {
        self.comparator.as_ref().map(Comparator::partitions)
    }

    /// Fuzzy similarity of the query to every case, in dataset order.
    pub fn similarities(&self, id: &str, query: &[Value]) -> Result<Vec<f64>, EstimateError> {
        let cmp = self
            .comparator
            .as_ref()
            .ok_or_else(|| EstimateError::InvalidConfig(format!("mode {} has no fuzzy model", self.config.mode)))?;
        let q = cmp.profile(id, query)?;
        self.profiles
            .iter()
            .map(|p| cmp.compare(&q, p).map_err(EstimateError::from))
            .collect()
    }

    pub fn estimate(&self, id: &str, query: &[Value]) -> Result<Estimate, EstimateError> {
        self.dataset.check_values(id, query)?;
        match self.config.mode {
            Mode::FuzzyAnalogy => self.fuzzy_analogy(id, query),
            Mode::CocomoAdjusted => self.cocomo_adjusted(id, query),
            Mode::CrispKnn => self.crisp_knn(query),
            Mode::DatasetMean => {
                let n = self.dataset.len();
                Ok(Estimate {
                    value: estimate_dataset_mean(&self.dataset)?,
                    mode: Mode::DatasetMean,
                    contributions: self.uniform_contributions(n, 1.0),
                    fallback_used: false,
                })
            }
        }
    }

    fn uniform_contributions(&self, n: usize, similarity: f64) -> Vec<Contribution> {
        self.dataset
            .projects()
            .iter()
            .map(|p| Contribution {
                id: p.id.clone(),
                similarity,
                weight: 1.0 / n as f64,
            })
            .collect()
    }

    fn fuzzy_analogy(&self, id: &str, query: &[Value]) -> Result<Estimate, EstimateError> {
        let sims = self.similarities(id, query)?;
        let efforts: Vec<f64> = self.dataset.efforts().collect();
        let (value, weights, fallback_used) = adapt(&sims, &efforts, self.config.fallback)?;
        let contributions = self
            .dataset
            .projects()
            .iter()
            .zip(sims.iter().zip(&weights))
            .map(|(p, (s, w))| Contribution {
                id: p.id.clone(),
                similarity: *s,
                weight: *w,
            })
            .collect();
        Ok(Estimate {
            value,
            mode: Mode::FuzzyAnalogy,
            contributions,
            fallback_used,
        })
    }

    fn cocomo_adjusted(&self, id: &str, query: &[Value]) -> Result<Estimate, EstimateError> {
        let size_attr = self.size_attr.expect("resolved at fit");
        let size = match query[size_attr] {
            Value::Numeric(x) => x,
            _ => {
                return Err(EstimateError::MissingValue(
                    self.dataset.schema()[size_attr].name.clone(),
                ))
            }
        };
        let sims = self.similarities(id, query)?;
        let k = self.config.knn_k.min(sims.len());
        let analogs = rank_desc(&sims, k);
        let distances: Vec<f64> = analogs.iter().map(|&i| 1.0 - sims[i]).collect();
        let multipliers = self.multipliers.effort_multipliers(&self.dataset, query);
        let inputs = CocomoInputs::new(size, distances, multipliers)?;
        let value = estimate_cocomo_adjusted(&inputs, self.config.a, self.config.b);
        let contributions = analogs
            .iter()
            .map(|&i| Contribution {
                id: self.dataset.projects()[i].id.clone(),
                similarity: sims[i],
                weight: 1.0 / k as f64,
            })
            .collect();
        Ok(Estimate {
            value,
            mode: Mode::CocomoAdjusted,
            contributions,
            fallback_used: false,
        })
    }

    fn crisp_similarity(&self, query: &[Value], case: &[Value]) -> Result<f64, EstimateError> {
        let mut total = 0.0;
        for &j in &self.features {
            let s = match (query[j], case[j]) {
                (Value::Missing, _) => return Err(EstimateError::MissingValue(self.dataset.schema()[j].name.clone())),
                (Value::Categorical(a), Value::Categorical(b)) => f64::from(u8::from(a == b)),
                (Value::Numeric(x), Value::Numeric(y)) => match self.ranges[j] {
                    Some((lo, hi)) if hi > lo => (1.0 - (x - y).abs() / (hi - lo)).clamp(0.0, 1.0),
                    _ => f64::from(u8::from(x == y)),
                },
                _ => 0.0,
            };
            total += s;
        }
        Ok(total / self.features.len() as f64)
    }

    fn crisp_knn(&self, query: &[Value]) -> Result<Estimate, EstimateError> {
        let sims = self
            .dataset
            .projects()
            .iter()
            .map(|p| self.crisp_similarity(query, &p.values))
            .collect::<Result<Vec<_>, _>>()?;
        let k = self.config.knn_k;
        // Every case tied with the k-th best joins, so row order cannot pick among them.
        let cutoff = sims[*rank_desc(&sims, k).last().expect("k >= 1")];
        let chosen: Vec<usize> = (0..sims.len()).filter(|&i| sims[i] >= cutoff).collect();
        let efforts: Vec<f64> = chosen
            .iter()
            .map(|&i| self.dataset.projects()[i].actual_effort)
            .collect();
        let contributions = self
            .dataset
            .projects()
            .iter()
            .enumerate()
            .map(|(i, p)| Contribution {
                id: p.id.clone(),
                similarity: sims[i],
                weight: if chosen.contains(&i) {
                    1.0 / chosen.len() as f64
                } else {
                    0.0
                },
            })
            .collect();
        Ok(Estimate {
            value: mean(&efforts)?,
            mode: Mode::CrispKnn,
            contributions,
            fallback_used: false,
        })
    }
}

/// Indices of the `k` largest scores, ties broken by position.
fn rank_desc(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order.truncate(k);
    order
}
