//! Fuzzy sets, partitions and fuzzification of project attribute values.
//!
//! Every membership function is piecewise linear: an ordered list of `(x, μ)`
//! breakpoints with μ held constant beyond the first and last breakpoint, or a
//! singleton (point mass). Numeric attributes are graded against a partition of
//! their observed range; categorical terms live on an integer index axis where
//! term `k` is a triangle centred on `k`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{AttributeKind, Dataset, Value};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuzzyError {
    #[error("fuzzy set '{label}': {message}")]
    InvalidSet { label: String, message: String },
    #[error("partition '{attribute}': {message}")]
    InvalidPartition { attribute: String, message: String },
    #[error("attribute '{attribute}': need at least 2 distinct values to build a partition")]
    DegenerateAxis { attribute: String },
    #[error("need at least 2 fuzzy sets, got {0}")]
    TooFewSets(usize),
    #[error("overlap half-width must be positive and finite, got {0}")]
    InvalidOverlap(f64),
    #[error("value {value} of '{attribute}' lies outside every fuzzy set")]
    Coverage { attribute: String, value: f64 },
    #[error("unknown label '{label}' for '{attribute}'")]
    UnknownLabel { attribute: String, label: String },
    #[error("partition '{attribute}' is on the {actual} axis, expected {expected}")]
    AxisMismatch {
        attribute: String,
        expected: Axis,
        actual: Axis,
    },
    #[error("membership grades must lie in [0, 1] with at least one positive grade")]
    InvalidGrades,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// μ = 1 at exactly one point, 0 elsewhere.
    Singleton(f64),
    Breakpoints(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFuzzySet")]
pub struct FuzzySet {
    label: String,
    #[serde(flatten)]
    shape: Shape,
}

#[derive(Deserialize)]
struct RawFuzzySet {
    label: String,
    #[serde(flatten)]
    shape: Shape,
}

impl TryFrom<RawFuzzySet> for FuzzySet {
    type Error = FuzzyError;

    fn try_from(raw: RawFuzzySet) -> Result<Self, Self::Error> {
        match raw.shape {
            Shape::Singleton(at) => FuzzySet::singleton(raw.label, at),
            Shape::Breakpoints(points) => FuzzySet::new(raw.label, points),
        }
    }
}

impl FuzzySet {
    /// Piecewise-linear set. Breakpoints must be strictly increasing in `x`, grades
    /// in `[0, 1]`, and at least one grade must equal 1 (normal condition).
    pub fn new(label: impl Into<String>, breakpoints: Vec<(f64, f64)>) -> Result<Self, FuzzyError> {
        let label = label.into();
        let bad = |message: &str| FuzzyError::InvalidSet {
            label: label.clone(),
            message: message.to_string(),
        };
        if breakpoints.is_empty() {
            return Err(bad("no breakpoints"));
        }
        if breakpoints
            .iter()
            .any(|(x, mu)| !x.is_finite() || !(0.0..=1.0).contains(mu))
        {
            return Err(bad("breakpoints need finite x and grades in [0, 1]"));
        }
        if breakpoints.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(bad("breakpoints must be strictly increasing in x"));
        }
        if !breakpoints.iter().any(|&(_, mu)| mu == 1.0) {
            return Err(bad("not normal: no breakpoint reaches grade 1"));
        }
        Ok(FuzzySet {
            label,
            shape: Shape::Breakpoints(breakpoints),
        })
    }

    pub fn singleton(label: impl Into<String>, at: f64) -> Result<Self, FuzzyError> {
        let label = label.into();
        if !at.is_finite() {
            return Err(FuzzyError::InvalidSet {
                label,
                message: "singleton position must be finite".into(),
            });
        }
        Ok(FuzzySet {
            label,
            shape: Shape::Singleton(at),
        })
    }

    pub fn triangular(label: impl Into<String>, left: f64, peak: f64, right: f64) -> Result<Self, FuzzyError> {
        FuzzySet::new(label, vec![(left, 0.0), (peak, 1.0), (right, 0.0)])
    }

    pub fn trapezoidal(
        label: impl Into<String>,
        left: f64,
        core_start: f64,
        core_end: f64,
        right: f64,
    ) -> Result<Self, FuzzyError> {
        FuzzySet::new(
            label,
            vec![(left, 0.0), (core_start, 1.0), (core_end, 1.0), (right, 0.0)],
        )
    }

    /// Grade 1 up to `peak`, falling to 0 at `zero_at`.
    pub fn left_shoulder(label: impl Into<String>, peak: f64, zero_at: f64) -> Result<Self, FuzzyError> {
        FuzzySet::new(label, vec![(peak, 1.0), (zero_at, 0.0)])
    }

    /// Grade 0 up to `zero_at`, rising to 1 at `peak` and staying there.
    pub fn right_shoulder(label: impl Into<String>, zero_at: f64, peak: f64) -> Result<Self, FuzzyError> {
        FuzzySet::new(label, vec![(zero_at, 0.0), (peak, 1.0)])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Linear interpolation between breakpoints, constant beyond the ends.
    pub fn membership(&self, x: f64) -> f64 {
        if x.is_nan() {
            return 0.0;
        }
        match &self.shape {
            Shape::Singleton(at) => {
                if x == *at {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Breakpoints(points) => {
                let first = points[0];
                let last = points[points.len() - 1];
                if x <= first.0 {
                    return first.1;
                }
                if x >= last.0 {
                    return last.1;
                }
                // First breakpoint strictly right of x; x lies in [points[i-1], points[i]).
                let i = points.partition_point(|&(bx, _)| bx <= x);
                let (x0, m0) = points[i - 1];
                let (x1, m1) = points[i];
                m0 + (m1 - m0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// First x where the grade is 1.
    pub fn peak(&self) -> f64 {
        match &self.shape {
            Shape::Singleton(at) => *at,
            Shape::Breakpoints(points) => points
                .iter()
                .find(|(_, mu)| *mu == 1.0)
                .map(|(x, _)| *x)
                .expect("normal by construction"),
        }
    }

    fn breakpoint_xs(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Singleton(at) => vec![*at],
            Shape::Breakpoints(points) => points.iter().map(|p| p.0).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Raw numeric values.
    Value,
    /// Integer positions of ordered categorical terms.
    TermIndex,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Value => "value",
            Axis::TermIndex => "term-index",
        })
    }
}

/// Grades of one value against every set of a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MembershipVector(Vec<f64>);

impl MembershipVector {
    pub fn new(grades: Vec<f64>) -> Result<Self, FuzzyError> {
        if grades.iter().any(|g| !(0.0..=1.0).contains(g)) || !grades.iter().any(|g| *g > 0.0) {
            return Err(FuzzyError::InvalidGrades);
        }
        Ok(MembershipVector(grades))
    }

    pub fn grades(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPartition")]
pub struct FuzzyPartition {
    attribute: String,
    axis: Axis,
    sets: Vec<FuzzySet>,
}

#[derive(Deserialize)]
struct RawPartition {
    attribute: String,
    axis: Axis,
    sets: Vec<FuzzySet>,
}

impl TryFrom<RawPartition> for FuzzyPartition {
    type Error = FuzzyError;

    fn try_from(raw: RawPartition) -> Result<Self, Self::Error> {
        FuzzyPartition::new(raw.attribute, raw.axis, raw.sets)
    }
}

impl FuzzyPartition {
    /// Checks that set peaks are strictly increasing and that some set has a
    /// positive grade everywhere between the first and last peak.
    pub fn new(attribute: impl Into<String>, axis: Axis, sets: Vec<FuzzySet>) -> Result<Self, FuzzyError> {
        let attribute = attribute.into();
        let bad = |message: String| FuzzyError::InvalidPartition {
            attribute: attribute.clone(),
            message,
        };
        if sets.is_empty() {
            return Err(bad("no fuzzy sets".into()));
        }
        let peaks: Vec<f64> = sets.iter().map(FuzzySet::peak).collect();
        if peaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("set peaks must be strictly increasing".into()));
        }
        let (lo, hi) = (peaks[0], peaks[peaks.len() - 1]);
        let mut probes: Vec<f64> = sets
            .iter()
            .flat_map(FuzzySet::breakpoint_xs)
            .filter(|x| (lo..=hi).contains(x))
            .chain([lo, hi])
            .collect();
        probes.sort_by(f64::total_cmp);
        probes.dedup();
        let mids: Vec<f64> = probes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let singleton_only = sets.iter().all(|s| matches!(s.shape, Shape::Singleton(_)));
        if !singleton_only {
            for x in probes.iter().chain(&mids) {
                if sets.iter().all(|s| s.membership(*x) == 0.0) {
                    return Err(bad(format!("coverage gap at {x}")));
                }
            }
        }
        Ok(FuzzyPartition { attribute, axis, sets })
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn sets(&self) -> &[FuzzySet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn peaks(&self) -> Vec<f64> {
        self.sets.iter().map(FuzzySet::peak).collect()
    }

    fn grade_at(&self, x: f64) -> Result<MembershipVector, FuzzyError> {
        let grades: Vec<f64> = self.sets.iter().map(|s| s.membership(x)).collect();
        MembershipVector::new(grades).map_err(|_| FuzzyError::Coverage {
            attribute: self.attribute.clone(),
            value: x,
        })
    }

    fn expect_axis(&self, expected: Axis) -> Result<(), FuzzyError> {
        if self.axis != expected {
            return Err(FuzzyError::AxisMismatch {
                attribute: self.attribute.clone(),
                expected,
                actual: self.axis,
            });
        }
        Ok(())
    }

    /// Grades of term position `index` (categorical partitions).
    pub fn fuzzify_index(&self, index: usize) -> Result<MembershipVector, FuzzyError> {
        self.expect_axis(Axis::TermIndex)?;
        self.grade_at(index as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMethod {
    /// Peaks equally spaced from min to max.
    Uniform,
    /// Peaks at the equal-frequency bin midpoints, quantiles (2k+1)/(2K).
    Quantile,
}

impl FromStr for PartitionMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(PartitionMethod::Uniform),
            "quantile" => Ok(PartitionMethod::Quantile),
            other => Err(format!(
                "unknown partition method '{other}' (expected uniform or quantile)"
            )),
        }
    }
}

/// Linear-interpolation quantile of sorted data, `p` in `[0, 1]`.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// K triangular sets over the observed range of `values`. Each triangle reaches
/// 0 at its neighbours' peaks; the two end sets are shouldered so values past
/// the extreme peaks keep grade 1.
///
/// Quantile peaks that coincide (heavily tied data) are merged, so the result can
/// hold fewer than K sets; if fewer than two distinct peaks remain the uniform
/// placement is used instead.
pub fn build_numeric_partition(
    attribute: &str,
    values: &[f64],
    k: usize,
    method: PartitionMethod,
) -> Result<FuzzyPartition, FuzzyError> {
    if k < 2 {
        return Err(FuzzyError::TooFewSets(k));
    }
    let mut sorted: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    let degenerate = || FuzzyError::DegenerateAxis {
        attribute: attribute.to_string(),
    };
    let (min, max) = match (sorted.first(), sorted.last()) {
        (Some(&lo), Some(&hi)) if lo < hi => (lo, hi),
        _ => return Err(degenerate()),
    };

    let uniform = || -> Vec<f64> {
        let span = max - min;
        (0..k)
            .map(|i| {
                if i == k - 1 {
                    max
                } else {
                    min + span * i as f64 / (k - 1) as f64
                }
            })
            .collect()
    };
    let mut peaks = match method {
        PartitionMethod::Uniform => uniform(),
        PartitionMethod::Quantile => (0..k)
            .map(|i| quantile_sorted(&sorted, (2 * i + 1) as f64 / (2 * k) as f64))
            .collect(),
    };
    peaks.dedup_by(|b, a| *b <= *a);
    if peaks.len() < 2 {
        peaks = uniform();
    }

    let n = peaks.len();
    let sets = (0..n)
        .map(|i| {
            let label = format!("s{}", i + 1);
            if i == 0 {
                FuzzySet::left_shoulder(label, peaks[0], peaks[1])
            } else if i == n - 1 {
                FuzzySet::right_shoulder(label, peaks[n - 2], peaks[n - 1])
            } else {
                FuzzySet::triangular(label, peaks[i - 1], peaks[i], peaks[i + 1])
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    FuzzyPartition::new(attribute, Axis::Value, sets)
}

/// One triangle per term on the index axis, centred on the term's position with
/// half-width `overlap`. With `overlap <= 1` the grades are one-hot; otherwise a
/// neighbour at distance 1 gets `1 - 1/overlap`.
pub fn build_categorical_partition(
    attribute: &str,
    terms: &[String],
    overlap: f64,
) -> Result<FuzzyPartition, FuzzyError> {
    if !(overlap > 0.0) || !overlap.is_finite() {
        return Err(FuzzyError::InvalidOverlap(overlap));
    }
    let sets = terms
        .iter()
        .enumerate()
        .map(|(k, term)| {
            let c = k as f64;
            FuzzySet::triangular(term.clone(), c - overlap, c, c + overlap)
        })
        .collect::<Result<Vec<_>, _>>()?;
    FuzzyPartition::new(attribute, Axis::TermIndex, sets)
}

/// Grades a crisp number against a value-axis partition. The number is a
/// singleton fuzzy set; its max-min match with each set collapses to μ_k(x).
pub fn fuzzify_numeric(x: f64, partition: &FuzzyPartition) -> Result<MembershipVector, FuzzyError> {
    partition.expect_axis(Axis::Value)?;
    partition.grade_at(x)
}

pub fn fuzzify_categorical(label: &str, partition: &FuzzyPartition) -> Result<MembershipVector, FuzzyError> {
    partition.expect_axis(Axis::TermIndex)?;
    let index = partition
        .sets
        .iter()
        .position(|s| s.label == label)
        .ok_or_else(|| FuzzyError::UnknownLabel {
            attribute: partition.attribute.clone(),
            label: label.to_string(),
        })?;
    partition.grade_at(index as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FuzzyConfig {
    /// Sets per numeric attribute.
    pub k_sets: usize,
    pub method: PartitionMethod,
    /// Half-width of categorical term triangles.
    pub overlap: f64,
}

impl Default for FuzzyConfig {
    fn default() -> Self {
        FuzzyConfig {
            k_sets: 5,
            method: PartitionMethod::Quantile,
            overlap: 1.5,
        }
    }
}

/// One partition per schema attribute, in schema order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetPartitions {
    pub config: FuzzyConfig,
    pub partitions: Vec<FuzzyPartition>,
}

impl DatasetPartitions {
    /// Builds partitions from the dataset's observed values. A numeric attribute
    /// with a single observed value gets one set of constant grade 1, so it
    /// cannot separate any two projects.
    pub fn build(dataset: &Dataset, config: &FuzzyConfig) -> Result<Self, FuzzyError> {
        let partitions = dataset
            .schema()
            .iter()
            .enumerate()
            .map(|(j, attr)| match &attr.kind {
                AttributeKind::Categorical { terms } => build_categorical_partition(&attr.name, terms, config.overlap),
                AttributeKind::Numeric { .. } => {
                    let values: Vec<f64> = dataset
                        .projects()
                        .iter()
                        .filter_map(|p| p.values[j].as_numeric())
                        .collect();
                    match build_numeric_partition(&attr.name, &values, config.k_sets, config.method) {
                        Err(FuzzyError::DegenerateAxis { .. }) if !values.is_empty() => FuzzyPartition::new(
                            attr.name.clone(),
                            Axis::Value,
                            vec![FuzzySet::new("s1", vec![(values[0], 1.0)])?],
                        ),
                        other => other,
                    }
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DatasetPartitions {
            config: *config,
            partitions,
        })
    }

    pub fn get(&self, attr: usize) -> &FuzzyPartition {
        &self.partitions[attr]
    }

    /// Fuzzifies one attribute value. Missing values are not fuzzifiable.
    pub fn fuzzify(&self, attr: usize, value: &Value) -> Result<Option<MembershipVector>, FuzzyError> {
        let partition = &self.partitions[attr];
        match value {
            Value::Missing => Ok(None),
            Value::Numeric(x) => fuzzify_numeric(*x, partition).map(Some),
            Value::Categorical(i) => partition.fuzzify_index(*i).map(Some),
        }
    }
}
