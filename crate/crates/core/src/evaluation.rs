//! MRE/MMRE scoring, the leave-one-out harness, and comparison against the
//! reference results.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Preset, Project};
use crate::estimator::{EstimateError, EstimationConfig, Estimator, Mode};
use crate::fuzzy::DatasetPartitions;
use crate::FORMAT_VERSION;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("actual effort must be positive, got {0}")]
    NonPositiveActual(f64),
    #[error("cannot average an empty list of errors")]
    Empty,
    #[error("leave-one-out needs at least 2 projects, got {0}")]
    TooFewProjects(usize),
    #[error("every fold failed; first error: {0}")]
    AllFailed(String),
    #[error("no reference results for dataset '{0}'")]
    UnknownDataset(String),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

/// Magnitude of relative error `|actual - estimated| / actual`.
pub fn mre(actual: f64, estimated: f64) -> Result<f64, EvalError> {
    if !(actual > 0.0) || !actual.is_finite() {
        return Err(EvalError::NonPositiveActual(actual));
    }
    Ok((actual - estimated).abs() / actual)
}

/// Mean MRE as a percentage.
pub fn mmre(mres: &[f64]) -> Result<f64, EvalError> {
    if mres.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(100.0 * mres.iter().sum::<f64>() / mres.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectRecord {
    pub id: String,
    pub actual: f64,
    pub estimated: Option<f64>,
    pub mre: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub method: String,
    pub mmre_percent: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format_version: String,
    pub dataset: String,
    pub protocol: String,
    pub project_count: usize,
    pub mmre_percent: f64,
    pub failures: usize,
    pub actual_mean_effort: f64,
    /// Mean of the successful estimates.
    pub estimated_mean_effort: f64,
    pub records: Vec<ProjectRecord>,
    pub baselines: Vec<BaselineRow>,
    pub config: EstimationConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LooOptions {
    /// Build partitions once from the full dataset instead of per fold. The
    /// held-out project then shapes its own partitions.
    pub shared_partitions: bool,
    /// Also score the dataset-mean and crisp k-NN baselines.
    pub baselines: bool,
}

pub const LOO_PROTOCOL: &str = "leave-one-out";
pub const LOO_LEAKY_PROTOCOL: &str = "leave-one-out (leaky: shared partitions)";

/// Runs `estimate(training, held_out)` for every project, where `training` is
/// the dataset without the held-out project. Records come back in dataset order.
pub fn loo_records<F>(dataset: &Dataset, mut estimate: F) -> Result<Vec<ProjectRecord>, EvalError>
where
    F: FnMut(&Dataset, &Project) -> Result<f64, EstimateError>,
{
    if dataset.len() < 2 {
        return Err(EvalError::TooFewProjects(dataset.len()));
    }
    let records: Vec<ProjectRecord> = dataset
        .projects()
        .iter()
        .enumerate()
        .map(|(i, held_out)| {
            let training = dataset.filtered(|j, _| j != i);
            let outcome = estimate(&training, held_out)
                .map_err(EvalError::from)
                .and_then(|est| Ok((est, mre(held_out.actual_effort, est)?)));
            match outcome {
                Ok((est, m)) => ProjectRecord {
                    id: held_out.id.clone(),
                    actual: held_out.actual_effort,
                    estimated: Some(est),
                    mre: Some(m),
                    error: None,
                },
                Err(e) => ProjectRecord {
                    id: held_out.id.clone(),
                    actual: held_out.actual_effort,
                    estimated: None,
                    mre: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    if records.iter().all(|r| r.mre.is_none()) {
        let first = records[0].error.clone().unwrap_or_default();
        return Err(EvalError::AllFailed(first));
    }
    Ok(records)
}

fn mmre_of(records: &[ProjectRecord]) -> Result<(f64, usize), EvalError> {
    let mres: Vec<f64> = records.iter().filter_map(|r| r.mre).collect();
    Ok((mmre(&mres)?, records.len() - mres.len()))
}

fn run_mode(
    dataset: &Dataset,
    config: &EstimationConfig,
    shared: Option<&DatasetPartitions>,
) -> Result<Vec<ProjectRecord>, EvalError> {
    loo_records(dataset, |training, held_out| {
        let est = match shared {
            Some(parts) if matches!(config.mode, Mode::FuzzyAnalogy | Mode::CocomoAdjusted) => {
                Estimator::fit_with_partitions(training, config, parts.clone())?
            }
            _ => Estimator::fit(training, config)?,
        };
        Ok(est.estimate(&held_out.id, &held_out.values)?.value)
    })
}

/// Leave-one-out evaluation of the configured estimator. Partitions are rebuilt
/// from each training fold unless `options.shared_partitions` is set.
pub fn loo_evaluate(
    dataset: &Dataset,
    config: &EstimationConfig,
    options: LooOptions,
) -> Result<EvaluationReport, EvalError> {
    config.validate()?;
    let shared = if options.shared_partitions {
        Some(DatasetPartitions::build(dataset, &config.fuzzy).map_err(EstimateError::from)?)
    } else {
        None
    };
    let records = run_mode(dataset, config, shared.as_ref())?;
    let (mmre_percent, failures) = mmre_of(&records)?;

    let estimates: Vec<f64> = records.iter().filter_map(|r| r.estimated).collect();
    let estimated_mean_effort = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let actual_mean_effort = dataset.efforts().sum::<f64>() / dataset.len() as f64;

    let mut baselines = Vec::new();
    if options.baselines {
        for mode in [Mode::DatasetMean, Mode::CrispKnn] {
            if mode == config.mode {
                continue;
            }
            let cfg = EstimationConfig { mode, ..config.clone() };
            // A baseline that cannot run (e.g. k larger than a fold) is simply omitted.
            if let Ok(recs) = run_mode(dataset, &cfg, None) {
                let (m, f) = mmre_of(&recs)?;
                baselines.push(BaselineRow {
                    method: mode.to_string(),
                    mmre_percent: m,
                    failures: f,
                });
            }
        }
    }

    Ok(EvaluationReport {
        format_version: FORMAT_VERSION.to_string(),
        dataset: dataset.name().to_string(),
        protocol: if options.shared_partitions {
            LOO_LEAKY_PROTOCOL
        } else {
            LOO_PROTOCOL
        }
        .to_string(),
        project_count: dataset.len(),
        mmre_percent,
        failures,
        actual_mean_effort,
        estimated_mean_effort,
        records,
        baselines,
        config: config.clone(),
    })
}

impl EvaluationReport {
    pub fn baseline(&self, method: &str) -> Option<&BaselineRow> {
        self.baselines.iter().find(|b| b.method == method)
    }

    /// `id,actual,estimated,mre,error`, one row per project.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["id", "actual", "estimated", "mre", "error"])
            .expect("in-memory write");
        for r in &self.records {
            writer
                .write_record([
                    r.id.clone(),
                    format!("{:.6}", r.actual),
                    r.estimated.map(|e| format!("{e:.6}")).unwrap_or_default(),
                    r.mre.map(|m| format!("{m:.6}")).unwrap_or_default(),
                    r.error.clone().unwrap_or_default(),
                ])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// Reference per-dataset figures: project count, actual and estimated average effort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceDataset {
    pub dataset: Preset,
    pub projects: usize,
    pub actual_avg_effort: f64,
    pub estimated_avg_effort: f64,
}

/// One reference MMRE (%) row across NASA60, NASA93 and Desharnais.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceMethod {
    pub method: &'static str,
    pub nasa60: f64,
    pub nasa93: f64,
    pub desharnais: f64,
}

impl ReferenceMethod {
    pub fn mmre(&self, dataset: Preset) -> f64 {
        match dataset {
            Preset::Nasa60 => self.nasa60,
            Preset::Nasa93 => self.nasa93,
            Preset::Desharnais => self.desharnais,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceResults {
    pub datasets: [ReferenceDataset; 3],
    pub methods: [ReferenceMethod; 3],
}

pub const PROPOSED_METHOD: &str = "Fuzzy analogy (reference)";

pub const REFERENCE_RESULTS: ReferenceResults = ReferenceResults {
    datasets: [
        ReferenceDataset {
            dataset: Preset::Nasa60,
            projects: 60,
            actual_avg_effort: 406.413,
            estimated_avg_effort: 359.324,
        },
        ReferenceDataset {
            dataset: Preset::Nasa93,
            projects: 93,
            actual_avg_effort: 734.031,
            estimated_avg_effort: 530.148,
        },
        ReferenceDataset {
            dataset: Preset::Desharnais,
            projects: 77,
            actual_avg_effort: 5046.308,
            estimated_avg_effort: 4786.311,
        },
    ],
    methods: [
        ReferenceMethod {
            method: PROPOSED_METHOD,
            nasa60: 5.15,
            nasa93: 6.95,
            desharnais: 4.98,
        },
        ReferenceMethod {
            method: "Analogy with Fuzzy Number",
            nasa60: 33.37,
            nasa93: 28.55,
            desharnais: 26.89,
        },
        ReferenceMethod {
            method: "Fuzzy method",
            nasa60: 32.651,
            nasa93: 54.81,
            desharnais: 30.6,
        },
    ],
};

impl ReferenceResults {
    pub fn dataset(&self, preset: Preset) -> &ReferenceDataset {
        self.datasets
            .iter()
            .find(|d| d.dataset == preset)
            .expect("all presets listed")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub protocol: String,
    pub projects: usize,
    pub reference_projects: Option<usize>,
    pub mmre_percent: f64,
    pub reference_mmre_percent: Option<f64>,
    pub mmre_delta: Option<f64>,
    /// MMRE of the dataset-mean baseline, if it was scored.
    pub dataset_mean_mmre_percent: Option<f64>,
    pub actual_avg_effort: f64,
    pub reference_actual_avg_effort: Option<f64>,
    pub actual_avg_delta: Option<f64>,
    pub estimated_avg_effort: f64,
    pub reference_estimated_avg_effort: Option<f64>,
    pub estimated_avg_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub format_version: String,
    pub rows: Vec<ComparisonRow>,
    pub references: ReferenceResults,
}

impl ComparisonRow {
    /// A row with every reference column empty.
    pub fn unreferenced(report: &EvaluationReport) -> Self {
        ComparisonRow {
            dataset: report.dataset.clone(),
            protocol: report.protocol.clone(),
            projects: report.project_count,
            reference_projects: None,
            mmre_percent: report.mmre_percent,
            reference_mmre_percent: None,
            mmre_delta: None,
            dataset_mean_mmre_percent: report.baseline(&Mode::DatasetMean.to_string()).map(|b| b.mmre_percent),
            actual_avg_effort: report.actual_mean_effort,
            reference_actual_avg_effort: None,
            actual_avg_delta: None,
            estimated_avg_effort: report.estimated_mean_effort,
            reference_estimated_avg_effort: None,
            estimated_avg_delta: None,
        }
    }

    fn referenced(report: &EvaluationReport, references: &ReferenceResults, preset: Preset) -> Self {
        let ds = references.dataset(preset);
        let published = references.methods[0].mmre(preset);
        ComparisonRow {
            reference_projects: Some(ds.projects),
            reference_mmre_percent: Some(published),
            mmre_delta: Some(report.mmre_percent - published),
            reference_actual_avg_effort: Some(ds.actual_avg_effort),
            actual_avg_delta: Some(report.actual_mean_effort - ds.actual_avg_effort),
            reference_estimated_avg_effort: Some(ds.estimated_avg_effort),
            estimated_avg_delta: Some(report.estimated_mean_effort - ds.estimated_avg_effort),
            ..ComparisonRow::unreferenced(report)
        }
    }
}

/// Lines each report up against the reference figures for its dataset. Every
/// report must name a known dataset; reference rows are always carried whole.
pub fn compare(reports: &[EvaluationReport], references: &ReferenceResults) -> Result<ComparisonTable, EvalError> {
    let rows = reports
        .iter()
        .map(|r| {
            let preset = Preset::detect(&r.dataset).ok_or_else(|| EvalError::UnknownDataset(r.dataset.clone()))?;
            Ok(ComparisonRow::referenced(r, references, preset))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(ComparisonTable {
        format_version: FORMAT_VERSION.to_string(),
        rows,
        references: references.clone(),
    })
}

/// Like [`compare`], but datasets without reference figures get `n/a` reference columns.
pub fn compare_lenient(reports: &[EvaluationReport], references: &ReferenceResults) -> ComparisonTable {
    ComparisonTable {
        format_version: FORMAT_VERSION.to_string(),
        rows: reports
            .iter()
            .map(|r| match Preset::detect(&r.dataset) {
                Some(p) => ComparisonRow::referenced(r, references, p),
                None => ComparisonRow::unreferenced(r),
            })
            .collect(),
        references: references.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AttributeSchema, Value};

    #[test]
    fn mre_examples() {
        assert_eq!(mre(100.0, 100.0).unwrap(), 0.0);
        assert_eq!(mre(100.0, 150.0).unwrap(), 0.5);
        let m = mre(406.413, 359.324).unwrap();
        assert!((m - 0.11586489605401401).abs() < 1e-12);
        assert_eq!(mre(0.0, 1.0), Err(EvalError::NonPositiveActual(0.0)));
    }

    #[test]
    fn mmre_examples() {
        assert!((mmre(&[0.05, 0.07, 0.03]).unwrap() - 5.0).abs() < 1e-12);
        assert!((mmre(&[0.0515]).unwrap() - 5.15).abs() < 1e-12);
        assert_eq!(mmre(&[]), Err(EvalError::Empty));
    }

    fn pair() -> Dataset {
        Dataset::new(
            "pair",
            vec![AttributeSchema::numeric("kloc")],
            vec![
                Project {
                    id: "a".into(),
                    values: vec![Value::Numeric(1.0)],
                    actual_effort: 100.0,
                },
                Project {
                    id: "b".into(),
                    values: vec![Value::Numeric(2.0)],
                    actual_effort: 300.0,
                },
            ],
            "pm",
        )
        .unwrap()
    }

    #[test]
    fn two_project_hand_case() {
        let records = loo_records(&pair(), |training, _| Ok(training.projects()[0].actual_effort)).unwrap();
        assert_eq!(records[0].mre, Some(2.0));
        assert!((records[1].mre.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let (m, f) = mmre_of(&records).unwrap();
        assert!((m - 133.33333333333331).abs() < 1e-9);
        assert_eq!(f, 0);
    }

    #[test]
    fn oracle_estimator_scores_zero() {
        let records = loo_records(&pair(), |_, held| Ok(held.actual_effort)).unwrap();
        assert_eq!(mmre_of(&records).unwrap().0, 0.0);
    }

    #[test]
    fn failures_recorded_not_fatal() {
        let records = loo_records(&pair(), |_, held| {
            if held.id == "a" {
                Err(EstimateError::ZeroSimilarity)
            } else {
                Ok(300.0)
            }
        })
        .unwrap();
        assert!(records[0].error.is_some());
        assert_eq!(mmre_of(&records).unwrap(), (0.0, 1));
        let all = loo_records(&pair(), |_, _| Err(EstimateError::ZeroSimilarity));
        assert!(matches!(all, Err(EvalError::AllFailed(_))));
    }

    #[test]
    fn too_small_for_loo() {
        let one = pair().filtered(|i, _| i == 0);
        assert_eq!(
            loo_evaluate(&one, &EstimationConfig::default(), LooOptions::default()),
            Err(EvalError::TooFewProjects(1))
        );
    }

    fn report(name: &str, mmre: f64) -> EvaluationReport {
        let mut r = loo_evaluate(&pair(), &EstimationConfig::default(), LooOptions::default()).unwrap();
        r.dataset = name.into();
        r.mmre_percent = mmre;
        r
    }

    #[test]
    fn comparison_deltas() {
        let table = compare(&[report("nasa60", 5.15)], &REFERENCE_RESULTS).unwrap();
        assert_eq!(table.rows[0].mmre_delta, Some(0.0));
        assert_eq!(table.rows[0].reference_estimated_avg_effort, Some(359.324));
        assert!(table.rows[0].estimated_avg_delta.is_some());

        let empty = compare(&[], &REFERENCE_RESULTS).unwrap();
        assert!(empty.rows.is_empty());
        assert_eq!(empty.references.methods.len(), 3);

        assert_eq!(
            compare(&[report("toy", 1.0)], &REFERENCE_RESULTS),
            Err(EvalError::UnknownDataset("toy".into()))
        );
        let lenient = compare_lenient(&[report("toy", 1.0)], &REFERENCE_RESULTS);
        assert_eq!(lenient.rows[0].reference_mmre_percent, None);
    }

    #[test]
    fn desharnais_reference_row() {
        let table = compare(&[report("desharnais", 10.0)], &REFERENCE_RESULTS).unwrap();
        let row = &table.rows[0];
        assert_eq!(row.reference_estimated_avg_effort, Some(4786.311));
        assert_eq!(row.estimated_avg_delta, Some(row.estimated_avg_effort - 4786.311));
    }
}
