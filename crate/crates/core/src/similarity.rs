//! Per-attribute fuzzy similarity (max-min and sum-product aggregation) and its
//! combination into an overall project similarity.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Value};
use crate::fuzzy::{DatasetPartitions, FuzzyError, MembershipVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("membership vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("project '{project}' has no value for selected feature '{feature}'")]
    MissingValue { project: String, feature: String },
    #[error("unknown feature '{0}'")]
    UnknownFeature(String),
    #[error("feature selection is empty")]
    NoFeatures,
    #[error("partitions cover {partitions} attributes but the project has {values}")]
    SchemaMismatch { partitions: usize, values: usize },
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// max_k min(μ_k(a), μ_k(b))
    #[default]
    MaxMin,
    /// Σ_k μ_k(a)·μ_k(b)
    SumProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    #[default]
    ArithmeticMean,
    Minimum,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumProductNormalization {
    Raw,
    #[default]
    #[serde(rename = "clamped_at_1")]
    ClampedAt1,
}

fn normalized(s: &str) -> String {
    s.trim().to_ascii_lowercase().replace('-', "_")
}

impl FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalized(s).as_str() {
            "max_min" | "maxmin" => Ok(Aggregation::MaxMin),
            "sum_product" | "sumproduct" => Ok(Aggregation::SumProduct),
            _ => Err(format!("unknown aggregation '{s}' (expected max-min or sum-product)")),
        }
    }
}

impl FromStr for Combination {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalized(s).as_str() {
            "arithmetic_mean" | "mean" => Ok(Combination::ArithmeticMean),
            "minimum" | "min" => Ok(Combination::Minimum),
            "product" => Ok(Combination::Product),
            _ => Err(format!("unknown combination '{s}' (expected mean, minimum or product)")),
        }
    }
}

impl FromStr for SumProductNormalization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalized(s).as_str() {
            "raw" => Ok(SumProductNormalization::Raw),
            "clamped_at_1" | "clamped" | "clamp" => Ok(SumProductNormalization::ClampedAt1),
            _ => Err(format!("unknown normalization '{s}' (expected raw or clamped)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityConfig {
    pub aggregation: Aggregation,
    pub combination: Combination,
    /// Attribute names to compare on; `None` means every attribute.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<String>>,
    pub normalization: SumProductNormalization,
}

impl SimilarityConfig {
    /// Resolves the feature selection to schema indices.
    pub fn feature_indices(&self, attribute_names: &[&str]) -> Result<Vec<usize>, SimilarityError> {
        match &self.features {
            None if attribute_names.is_empty() => Err(SimilarityError::NoFeatures),
            None => Ok((0..attribute_names.len()).collect()),
            Some(list) if list.is_empty() => Err(SimilarityError::NoFeatures),
            Some(list) => list
                .iter()
                .map(|f| {
                    attribute_names
                        .iter()
                        .position(|n| n == f)
                        .ok_or_else(|| SimilarityError::UnknownFeature(f.clone()))
                })
                .collect(),
        }
    }

    /// Per-attribute score with the configured sum-product normalization.
    pub fn attr_score(&self, a: &MembershipVector, b: &MembershipVector) -> Result<f64, SimilarityError> {
        let raw = attr_similarity(a, b, self.aggregation)?;
        Ok(match (self.aggregation, self.normalization) {
            (Aggregation::SumProduct, SumProductNormalization::ClampedAt1) => raw.min(1.0),
            _ => raw,
        })
    }
}

/// Raw per-attribute similarity of two membership vectors from one partition.
pub fn attr_similarity(
    a: &MembershipVector,
    b: &MembershipVector,
    aggregation: Aggregation,
) -> Result<f64, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::LengthMismatch(a.len(), b.len()));
    }
    let pairs = a.grades().iter().zip(b.grades());
    Ok(match aggregation {
        Aggregation::MaxMin => pairs.map(|(x, y)| x.min(*y)).fold(0.0, f64::max),
        Aggregation::SumProduct => pairs.map(|(x, y)| x * y).sum(),
    })
}

pub fn combine(scores: &[f64], combination: Combination) -> f64 {
    match combination {
        Combination::ArithmeticMean => scores.iter().sum::<f64>() / scores.len() as f64,
        Combination::Minimum => scores.iter().copied().fold(f64::INFINITY, f64::min),
        Combination::Product => scores.iter().product(),
    }
}

/// A project fuzzified on the selected features.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile(Vec<MembershipVector>);

impl Profile {
    pub fn vectors(&self) -> &[MembershipVector] {
        &self.0
    }
}

/// Partitions plus a resolved feature selection: turns attribute values into
/// profiles and scores pairs of profiles.
#[derive(Debug, Clone)]
pub struct Comparator {
    partitions: DatasetPartitions,
    features: Vec<usize>,
    config: SimilarityConfig,
}

impl Comparator {
    pub fn new(partitions: DatasetPartitions, config: SimilarityConfig) -> Result<Self, SimilarityError> {
        let names: Vec<&str> = partitions.partitions.iter().map(|p| p.attribute()).collect();
        let features = config.feature_indices(&names)?;
        Ok(Comparator {
            partitions,
            features,
            config,
        })
    }

    pub fn partitions(&self) -> &DatasetPartitions {
        &self.partitions
    }

    pub fn features(&self) -> &[usize] {
        &self.features
    }

    pub fn config(&self) -> &SimilarityConfig {
        &self.config
    }

    pub fn profile(&self, id: &str, values: &[Value]) -> Result<Profile, SimilarityError> {
        if values.len() != self.partitions.partitions.len() {
            return Err(SimilarityError::SchemaMismatch {
                partitions: self.partitions.partitions.len(),
                values: values.len(),
            });
        }
        self.features
            .iter()
            .map(|&j| {
                self.partitions
                    .fuzzify(j, &values[j])?
                    .ok_or_else(|| SimilarityError::MissingValue {
                        project: id.to_string(),
                        feature: self.partitions.get(j).attribute().to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Profile)
    }

    pub fn compare(&self, a: &Profile, b: &Profile) -> Result<f64, SimilarityError> {
        let scores =
            a.0.iter()
                .zip(&b.0)
                .map(|(x, y)| self.config.attr_score(x, y))
                .collect::<Result<Vec<_>, _>>()?;
        Ok(combine(&scores, self.config.combination))
    }
}

/// Overall similarity of two projects given as schema-ordered values.
pub fn project_similarity(
    a: &[Value],
    b: &[Value],
    partitions: &DatasetPartitions,
    config: &SimilarityConfig,
) -> Result<f64, SimilarityError> {
    let cmp = Comparator::new(partitions.clone(), config.clone())?;
    let pa = cmp.profile("first", a)?;
    let pb = cmp.profile("second", b)?;
    cmp.compare(&pa, &pb)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityMatrix {
    pub ids: Vec<String>,
    pub scores: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    /// `id,<ids...>` header, then one row per project, scores to 6 decimals.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = std::iter::once("id")
            .chain(self.ids.iter().map(String::as_str))
            .collect();
        writer.write_record(&header).expect("in-memory write");
        for (id, row) in self.ids.iter().zip(&self.scores) {
            let cells: Vec<String> = std::iter::once(id.clone())
                .chain(row.iter().map(|s| format!("{s:.6}")))
                .collect();
            writer.write_record(&cells).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// All pairwise similarities; each unordered pair is computed once, so the
/// matrix is exactly symmetric.
pub fn similarity_matrix(
    dataset: &Dataset,
    partitions: &DatasetPartitions,
    config: &SimilarityConfig,
) -> Result<SimilarityMatrix, SimilarityError> {
    let cmp = Comparator::new(partitions.clone(), config.clone())?;
    let profiles = dataset
        .projects()
        .iter()
        .map(|p| cmp.profile(&p.id, &p.values))
        .collect::<Result<Vec<_>, _>>()?;
    let n = profiles.len();
    let mut scores = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let s = cmp.compare(&profiles[i], &profiles[j])?;
            scores[i][j] = s;
            scores[j][i] = s;
        }
    }
    Ok(SimilarityMatrix {
        ids: dataset.projects().iter().map(|p| p.id.clone()).collect(),
        scores,
    })
}
