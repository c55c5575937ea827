use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fuzzy_effort::config::{ConfigError, Overrides, RunConfig};
use fuzzy_effort::dataset::{self, Dataset, LoadOptions, Preset, SidecarSchema};
use fuzzy_effort::estimator::{Estimator, Fallback, Mode};
use fuzzy_effort::evaluation::{self, LooOptions, REFERENCE_RESULTS};
use fuzzy_effort::fuzzy::{DatasetPartitions, PartitionMethod};
use fuzzy_effort::report;
use fuzzy_effort::similarity::{self, Aggregation, Combination, SumProductNormalization};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_EVAL: u8 = 3;

/// Software effort estimation by fuzzy analogy.
#[derive(Parser, Debug)]
#[command(name = "fuzzy-effort", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Project counts, effort statistics and attribute ranges.
    Summarize {
        #[command(flatten)]
        data: DataArgs,
        /// Drop projects with missing values first.
        #[arg(long)]
        drop_incomplete: bool,
        #[arg(long, value_enum, default_value_t = TableFormat::Text)]
        format: TableFormat,
        /// Also write the summary to this file (JSON, or CSV with --format csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate effort for new projects, or for a held-out existing one.
    Estimate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Query projects: a JSON file holding one object or an array of
        /// {"id": "...", "values": {"attr": value, ...}}, or a headered .csv file.
        #[arg(long, required_unless_present = "project", conflicts_with = "project")]
        query: Option<PathBuf>,
        /// Estimate this project of the dataset from all the others.
        #[arg(long)]
        project: Option<String>,
        /// Analogs listed per estimate.
        #[arg(long, default_value_t = 5)]
        top: usize,
        #[arg(long, value_enum, default_value_t = TableFormat::Text)]
        format: TableFormat,
        /// Also write the estimates to this file (JSON, or CSV with --format csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leave-one-out MMRE evaluation, compared against reference results.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Output printed to stdout.
        #[arg(long, value_enum, default_value_t = EvalFormat::Text)]
        format: EvalFormat,
        /// Directory receiving NAME.report.json and NAME.records.csv per dataset,
        /// plus comparison.csv and mmre.svg.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Build fuzzy partitions once from all projects instead of per fold.
        #[arg(long)]
        leaky: bool,
        /// Skip the dataset-mean and crisp k-NN baselines.
        #[arg(long)]
        no_baselines: bool,
        /// Also write the fuzzy partitions of each full dataset (JSON) into --out.
        #[arg(long, requires = "out")]
        export_partitions: bool,
        /// Also write the pairwise similarity matrix of each dataset (CSV) into --out.
        #[arg(long, requires = "out")]
        export_similarity: bool,
    },
}

#[derive(Args, Debug)]
struct DataArgs {
    /// PATH, NAME=PATH, or a known dataset name (nasa60, nasa93, desharnais)
    /// looked up in $FUZZY_EFFORT_DATA_DIR or ./data. Repeatable.
    #[arg(long = "dataset", required = true)]
    datasets: Vec<String>,
    /// Sidecar JSON schema for CSV inputs.
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// fuzzy_analogy, cocomo_adjusted, crisp_knn or dataset_mean.
    #[arg(long, value_parser = parse_from_str::<Mode>)]
    mode: Option<Mode>,
    /// Comma-separated attribute names to compare on.
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    /// Fuzzy sets per numeric attribute.
    #[arg(long)]
    k_sets: Option<usize>,
    /// quantile or uniform placement of numeric set peaks.
    #[arg(long, value_parser = parse_from_str::<PartitionMethod>)]
    partition: Option<PartitionMethod>,
    /// Half-width of categorical term triangles.
    #[arg(long)]
    overlap: Option<f64>,
    /// Per-attribute similarity: max_min or sum_product.
    #[arg(long, value_parser = parse_from_str::<Aggregation>)]
    aggregation: Option<Aggregation>,
    /// Across attributes: arithmetic_mean, minimum or product.
    #[arg(long, value_parser = parse_from_str::<Combination>)]
    combination: Option<Combination>,
    /// sum_product scaling: clamped_at_1 or raw.
    #[arg(long, value_parser = parse_from_str::<SumProductNormalization>)]
    normalization: Option<SumProductNormalization>,
    /// COCOMO coefficient A.
    #[arg(long = "A", visible_alias = "a")]
    a: Option<f64>,
    /// COCOMO base exponent B.
    #[arg(long = "B", visible_alias = "b")]
    b: Option<f64>,
    /// Number of analogs used by crisp_knn and cocomo_adjusted.
    #[arg(long)]
    knn_k: Option<usize>,
    /// When no analog is similar at all: dataset_mean or error.
    #[arg(long, value_parser = parse_from_str::<Fallback>)]
    fallback: Option<Fallback>,
    /// Size attribute (KLOC) for the COCOMO-adjusted mode.
    #[arg(long)]
    size_attribute: Option<String>,
    /// Drop projects with missing values before fitting (the default).
    #[arg(long, conflicts_with = "keep_incomplete")]
    drop_incomplete: bool,
    /// Keep projects with missing values; folds that need them then fail individually.
    #[arg(long)]
    keep_incomplete: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum TableFormat {
    Text,
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum EvalFormat {
    Text,
    Json,
    Csv,
    Svg,
}

fn parse_from_str<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, String> {
    s.parse()
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Eval(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Eval(_) => EXIT_EVAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Eval(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<dataset::DataError> for CliError {
    fn from(e: dataset::DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Summarize {
            data,
            drop_incomplete,
            format,
            out,
        } => summarize(&data, drop_incomplete, format, out.as_deref()),
        Command::Estimate {
            data,
            model,
            query,
            project,
            top,
            format,
            out,
        } => estimate(
            &data,
            &model,
            query.as_deref(),
            project.as_deref(),
            top,
            format,
            out.as_deref(),
        ),
        Command::Evaluate {
            data,
            model,
            format,
            out,
            leaky,
            no_baselines,
            export_partitions,
            export_similarity,
        } => {
            let mut cfg = run_config(&model)?;
            if leaky {
                cfg.shared_partitions = true;
            }
            if no_baselines {
                cfg.baselines = false;
            }
            evaluate(
                &data,
                &cfg,
                format,
                out.as_deref(),
                export_partitions,
                export_similarity,
            )
        }
    }
}

fn run_config(model: &ModelArgs) -> Result<RunConfig, CliError> {
    let base = match &model.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let overrides = Overrides {
        mode: model.mode,
        k_sets: model.k_sets,
        partition_method: model.partition,
        overlap: model.overlap,
        aggregation: model.aggregation,
        combination: model.combination,
        normalization: model.normalization,
        features: model.features.clone(),
        a: model.a,
        b: model.b,
        knn_k: model.knn_k,
        fallback: model.fallback,
        size_attribute: model.size_attribute.clone(),
        drop_incomplete: if model.keep_incomplete {
            Some(false)
        } else {
            model.drop_incomplete.then_some(true)
        },
        shared_partitions: None,
        baselines: None,
    };
    Ok(overrides.apply(base)?)
}

fn data_dir() -> PathBuf {
    std::env::var_os("FUZZY_EFFORT_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn load_datasets(args: &DataArgs) -> Result<Vec<Dataset>, CliError> {
    let schema: Option<SidecarSchema> = match &args.schema {
        Some(p) => Some(dataset::read_schema_file(p)?),
        None => None,
    };
    args.datasets
        .iter()
        .map(|spec| {
            let (name, path) = match spec.split_once('=') {
                Some((n, p)) if !n.is_empty() => (Some(n), PathBuf::from(p)),
                _ => (None, PathBuf::from(spec)),
            };
            let path = if path.exists() {
                path
            } else {
                match Preset::detect(spec).filter(|_| name.is_none()) {
                    Some(preset) => preset.locate(&data_dir()).ok_or_else(|| {
                        CliError::Data(format!(
                            "dataset '{spec}' not found; expected one of {} in {}",
                            preset.file_names().join(", "),
                            data_dir().display()
                        ))
                    })?,
                    None => return Err(CliError::Data(format!("{}: no such file", path.display()))),
                }
            };
            let options = LoadOptions::for_file(&path, name);
            let ds = dataset::load_path(&path, &options, schema.as_ref())?;
            Ok(match name {
                Some(n) => ds.renamed(n),
                None => ds,
            })
        })
        .collect()
}

/// Drops incomplete projects when configured, reporting the count on stderr.
fn prepare(ds: Dataset, cfg: &RunConfig) -> Result<Dataset, CliError> {
    if !cfg.drop_incomplete || ds.incomplete_count() == 0 {
        return Ok(ds);
    }
    let dropped = ds.incomplete_count();
    let clean = dataset::drop_incomplete(&ds)?;
    eprintln!(
        "{}: dropped {dropped} incomplete project(s), {} remain",
        ds.name(),
        clean.len()
    );
    Ok(clean)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Prints `text` unless a structured format was asked for without a file.
/// The structured document goes to `out` when given, else to stdout.
fn deliver(format: TableFormat, out: Option<&Path>, text: &str, json: &str, csv: &str) -> Result<(), CliError> {
    let structured = if format == TableFormat::Csv { csv } else { json };
    match (format, out) {
        (TableFormat::Text, None) => emit(None, text),
        (_, None) => emit(None, structured),
        (_, Some(p)) => {
            emit(Some(p), structured)?;
            emit(None, text)
        }
    }
}

fn to_csv_string<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn summarize(data: &DataArgs, drop: bool, format: TableFormat, out: Option<&Path>) -> Result<(), CliError> {
    let cfg = RunConfig {
        drop_incomplete: drop,
        ..RunConfig::default()
    };
    let summaries = load_datasets(data)?
        .into_iter()
        .map(|ds| Ok(dataset::summarize(&prepare(ds, &cfg)?)?))
        .collect::<Result<Vec<_>, CliError>>()?;
    let text: String = summaries
        .iter()
        .map(|s| {
            format!(
                "{}: {} projects, mean effort {:.3} {}{}\n",
                s.dataset,
                s.project_count,
                s.mean_actual_effort,
                s.effort_unit,
                if s.incomplete_count > 0 {
                    format!(" ({} incomplete)", s.incomplete_count)
                } else {
                    String::new()
                }
            )
        })
        .collect();
    let csv = to_csv_string(
        &[
            "dataset",
            "projects",
            "incomplete",
            "mean_actual_effort",
            "min_effort",
            "max_effort",
            "effort_unit",
        ],
        summaries.iter().map(|s| {
            [
                s.dataset.clone(),
                s.project_count.to_string(),
                s.incomplete_count.to_string(),
                format!("{:.6}", s.mean_actual_effort),
                format!("{:.6}", s.min_effort),
                format!("{:.6}", s.max_effort),
                s.effort_unit.clone(),
            ]
        }),
    );
    deliver(
        format,
        out,
        &text,
        &report::json_document("summary", &cfg, &summaries),
        &report::csv_document("summary", &cfg, &csv),
    )
}

#[derive(serde::Serialize)]
struct EstimateRow {
    id: String,
    estimate: f64,
    mode: Mode,
    fallback_used: bool,
    analogs: Vec<fuzzy_effort::estimator::Contribution>,
}

#[derive(serde::Serialize)]
struct EstimateBody {
    dataset: String,
    training_projects: usize,
    dropped_incomplete: usize,
    estimates: Vec<EstimateRow>,
}

fn estimate(
    data: &DataArgs,
    model: &ModelArgs,
    query: Option<&Path>,
    project: Option<&str>,
    top: usize,
    format: TableFormat,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = run_config(model)?;
    let mut sets = load_datasets(data)?;
    if sets.len() != 1 {
        return Err(CliError::Usage("estimate takes exactly one --dataset".into()));
    }
    let full = sets.remove(0);
    let dropped = if cfg.drop_incomplete {
        full.incomplete_count()
    } else {
        0
    };

    let (training, queries) = match (query, project) {
        (Some(q), _) => {
            let in_file = |m: String| CliError::Data(format!("{}: {m}", q.display()));
            let text = std::fs::read_to_string(q).map_err(|e| in_file(e.to_string()))?;
            let is_csv = q.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
            let queries = if is_csv {
                full.queries_from_csv(&text).map_err(|e| in_file(e.to_string()))?
            } else {
                let json: serde_json::Value = serde_json::from_str(&text).map_err(|e| in_file(e.to_string()))?;
                let items = match json {
                    serde_json::Value::Array(items) => items,
                    one => vec![one],
                };
                items
                    .iter()
                    .map(|item| full.query_from_json(item))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| in_file(e.to_string()))?
            };
            (prepare(full, &cfg)?, queries)
        }
        (None, Some(id)) => {
            let held = full
                .projects()
                .iter()
                .find(|p| p.id == id)
                .cloned()
                .ok_or_else(|| CliError::Data(format!("no project '{id}' in {}", full.name())))?;
            let rest = full.filtered(|_, p| p.id != id);
            (prepare(rest, &cfg)?, vec![(held.id, held.values)])
        }
        (None, None) => unreachable!("clap requires --query or --project"),
    };

    let est = Estimator::fit(&training, &cfg.estimation).map_err(|e| CliError::Eval(e.to_string()))?;
    let rows = queries
        .iter()
        .map(|(id, values)| {
            let e = est
                .estimate(id, values)
                .map_err(|e| CliError::Eval(format!("{id}: {e}")))?;
            Ok(EstimateRow {
                id: id.clone(),
                estimate: e.value,
                mode: e.mode,
                fallback_used: e.fallback_used,
                analogs: e.top(top).into_iter().cloned().collect(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let unit = training.effort_unit().to_string();
    let mut text = String::new();
    for r in &rows {
        text.push_str(&format!(
            "{}: estimated effort {:.3} {unit} ({})\n",
            r.id, r.estimate, r.mode
        ));
        if r.fallback_used {
            text.push_str("  no similar project found; dataset mean used\n");
        }
        for c in &r.analogs {
            text.push_str(&format!(
                "  analog {}: similarity {:.4}, weight {:.4}\n",
                c.id, c.similarity, c.weight
            ));
        }
    }
    let csv = to_csv_string(
        &["id", "estimate", "mode", "fallback_used", "top_analogs"],
        rows.iter().map(|r| {
            let analogs: Vec<String> = r.analogs.iter().map(|c| format!("{}:{:.6}", c.id, c.weight)).collect();
            [
                r.id.clone(),
                format!("{:.6}", r.estimate),
                r.mode.to_string(),
                r.fallback_used.to_string(),
                analogs.join(" "),
            ]
        }),
    );
    let json = report::json_document(
        "estimate",
        &cfg,
        &EstimateBody {
            dataset: training.name().to_string(),
            training_projects: training.len(),
            dropped_incomplete: dropped,
            estimates: rows,
        },
    );
    deliver(format, out, &text, &json, &report::csv_document("estimate", &cfg, &csv))
}

#[derive(serde::Serialize)]
struct EvaluationBody<'a> {
    reports: &'a [evaluation::EvaluationReport],
    comparison: &'a evaluation::ComparisonTable,
}

fn evaluate(
    data: &DataArgs,
    cfg: &RunConfig,
    format: EvalFormat,
    out: Option<&Path>,
    export_partitions: bool,
    export_similarity: bool,
) -> Result<(), CliError> {
    let sets = load_datasets(data)?
        .into_iter()
        .map(|ds| prepare(ds, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let options = LooOptions {
        shared_partitions: cfg.shared_partitions,
        baselines: cfg.baselines,
    };
    // A dataset that fails entirely is reported; the others still produce output.
    let mut reports = Vec::new();
    let mut failed = Vec::new();
    for ds in &sets {
        match evaluation::loo_evaluate(ds, &cfg.estimation, options) {
            Ok(r) => {
                if r.failures > 0 {
                    eprintln!("{}: {} of {} folds failed", ds.name(), r.failures, r.project_count);
                }
                reports.push(r)
            }
            Err(e) => {
                eprintln!("error: {}: {e}", ds.name());
                failed.push(ds.name().to_string());
            }
        }
    }
    let table = evaluation::compare_lenient(&reports, &REFERENCE_RESULTS);
    let comparison = report::csv_document("comparison", cfg, &report::comparison_csv(&table));
    let svg = report::comparison_svg(&table, cfg);

    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
        let write = |name: &str, text: &str| emit(Some(&dir.join(name)), text);
        for r in &reports {
            write(
                &format!("{}.report.json", r.dataset),
                &report::json_document("evaluation", cfg, r),
            )?;
            write(
                &format!("{}.records.csv", r.dataset),
                &report::csv_document("records", cfg, &r.to_csv()),
            )?;
        }
        write("comparison.csv", &comparison)?;
        write("mmre.svg", &svg)?;
        for ds in sets.iter().filter(|_| export_partitions || export_similarity) {
            let parts = DatasetPartitions::build(ds, &cfg.estimation.fuzzy)
                .map_err(|e| CliError::Eval(format!("{}: {e}", ds.name())))?;
            if export_partitions {
                write(
                    &format!("{}.partitions.json", ds.name()),
                    &report::json_document("partitions", cfg, &parts),
                )?;
            }
            if export_similarity {
                let m = similarity::similarity_matrix(ds, &parts, &cfg.estimation.similarity)
                    .map_err(|e| CliError::Eval(format!("{}: {e}", ds.name())))?;
                write(
                    &format!("{}.similarity.csv", ds.name()),
                    &report::csv_document("similarity", cfg, &m.to_csv()),
                )?;
            }
        }
    }

    let stdout = match format {
        EvalFormat::Text => report::evaluation_text(&reports),
        EvalFormat::Json => report::json_document(
            "evaluation",
            cfg,
            &EvaluationBody {
                reports: &reports,
                comparison: &table,
            },
        ),
        EvalFormat::Csv => comparison,
        EvalFormat::Svg => svg,
    };
    emit(None, &stdout)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Eval(format!("evaluation failed for: {}", failed.join(", "))))
    }
}
