//! C ABI over `fuzzy_effort`.
//!
//! Every function returns an [`FeStatus`]; on failure the message is available
//! from [`fe_last_error_message`] on the same thread. Datasets and fitted
//! estimators are opaque handles released with their `_free` function. Strings
//! returned through `out` parameters are owned by the caller and released with
//! [`fe_string_free`]. Configuration is passed as run-configuration JSON (the
//! same document the command line accepts); a null pointer means defaults.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use fuzzy_effort::config::RunConfig;
use fuzzy_effort::dataset::{self, Dataset, LoadOptions};
use fuzzy_effort::estimator::{self, CocomoInputs, Estimator};
use fuzzy_effort::evaluation::{self, LooOptions};
use fuzzy_effort::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    DataError = 4,
    ConfigError = 5,
    EstimateError = 6,
    EvaluationError = 7,
    Panic = 8,
}

/// Opaque project dataset.
pub struct FeDataset {
    inner: Dataset,
}

/// Opaque estimator fitted to a dataset.
pub struct FeEstimator {
    inner: Estimator,
    dataset: Dataset,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(FeStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Data(_) => FeStatus::DataError,
            Error::Config(_) => FeStatus::ConfigError,
            Error::Fuzzy(_) | Error::Similarity(_) | Error::Estimate(_) => FeStatus::EstimateError,
            Error::Eval(_) => FeStatus::EvaluationError,
        };
        Failure(status, e.to_string())
    }
}

macro_rules! impl_failure_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}

impl_failure_from!(
    dataset::DataError,
    fuzzy_effort::config::ConfigError,
    estimator::EstimateError,
    evaluation::EvalError
);

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FeStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal error: {msg}"));
            FeStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(FeStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(FeStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn config_arg(p: *const c_char) -> Result<RunConfig, Failure> {
    match opt_str_arg(p, "config_json")? {
        Some(json) => Ok(RunConfig::from_json(json)?),
        None => Ok(RunConfig::default()),
    }
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(FeStatus::InvalidArgument, "output contains a nul byte".into()))?;
    write_out(out, c.into_raw())
}

unsafe fn dataset_ref<'a>(p: *const FeDataset) -> Result<&'a Dataset, Failure> {
    p.as_ref().map(|d| &d.inner).ok_or_else(|| null("dataset"))
}

unsafe fn f64_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn prepared(ds: &Dataset, cfg: &RunConfig) -> Result<Dataset, Failure> {
    if cfg.drop_incomplete && ds.incomplete_count() > 0 {
        Ok(dataset::drop_incomplete(ds)?)
    } else {
        Ok(ds.clone())
    }
}

fn boxed(ds: Dataset) -> *mut FeDataset {
    Box::into_raw(Box::new(FeDataset { inner: ds }))
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn fe_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library format version, a static string.
#[no_mangle]
pub extern "C" fn fe_version() -> *const c_char {
    static VERSION: &CStr = c"fuzzy-effort/1";
    VERSION.as_ptr()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fe_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads an ARFF file. `name` may be null; known dataset names (nasa60, nasa93,
/// desharnais) select their column conventions.
///
/// # Safety
/// Pointers must be valid; `out` receives a handle to free with [`fe_dataset_free`].
#[no_mangle]
pub unsafe extern "C" fn fe_dataset_from_arff(
    path: *const c_char,
    name: *const c_char,
    out: *mut *mut FeDataset,
) -> FeStatus {
    guard(|| {
        let path = Path::new(str_arg(path, "path")?);
        let name = opt_str_arg(name, "name")?;
        let ds = dataset::load_path(path, &LoadOptions::for_file(path, name), None)?;
        let ds = match name {
            Some(n) => ds.renamed(n),
            None => ds,
        };
        write_out(out, boxed(ds))
    })
}

/// Loads a headered CSV file described by a JSON sidecar schema file.
///
/// # Safety
/// Pointers must be valid; `out` receives a handle to free with [`fe_dataset_free`].
#[no_mangle]
pub unsafe extern "C" fn fe_dataset_from_csv(
    csv_path: *const c_char,
    schema_path: *const c_char,
    out: *mut *mut FeDataset,
) -> FeStatus {
    guard(|| {
        let schema = dataset::read_schema_file(Path::new(str_arg(schema_path, "schema_path")?))?;
        let path = Path::new(str_arg(csv_path, "csv_path")?);
        let ds = dataset::load_path(path, &LoadOptions::default(), Some(&schema))?;
        write_out(out, boxed(ds))
    })
}

/// New handle holding only the complete projects of `dataset`.
///
/// # Safety
/// `dataset` must be a live handle; `out` receives a new handle.
#[no_mangle]
pub unsafe extern "C" fn fe_dataset_drop_incomplete(dataset: *const FeDataset, out: *mut *mut FeDataset) -> FeStatus {
    guard(|| {
        let cleaned = dataset::drop_incomplete(dataset_ref(dataset)?)?;
        write_out(out, boxed(cleaned))
    })
}

/// # Safety
/// `dataset` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fe_dataset_len(dataset: *const FeDataset, out: *mut usize) -> FeStatus {
    guard(|| write_out(out, dataset_ref(dataset)?.len()))
}

/// Mean actual effort.
///
/// # Safety
/// `dataset` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fe_dataset_mean_effort(dataset: *const FeDataset, out: *mut f64) -> FeStatus {
    guard(|| {
        let s = dataset::summarize(dataset_ref(dataset)?)?;
        write_out(out, s.mean_actual_effort)
    })
}

/// Dataset summary as JSON.
///
/// # Safety
/// `dataset` must be a live handle; free the string with [`fe_string_free`].
#[no_mangle]
pub unsafe extern "C" fn fe_dataset_summary_json(dataset: *const FeDataset, out: *mut *mut c_char) -> FeStatus {
    guard(|| {
        let s = dataset::summarize(dataset_ref(dataset)?)?;
        write_string(out, serde_json::to_string(&s).expect("summary serializes"))
    })
}

/// Releases a dataset handle. Null is ignored.
///
/// # Safety
/// `dataset` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fe_dataset_free(dataset: *mut FeDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Fits an estimator. Incomplete projects are dropped first unless the
/// configuration says otherwise.
///
/// # Safety
/// `dataset` must be a live handle; `config_json` may be null; free the result
/// with [`fe_estimator_free`].
#[no_mangle]
pub unsafe extern "C" fn fe_estimator_fit(
    dataset: *const FeDataset,
    config_json: *const c_char,
    out: *mut *mut FeEstimator,
) -> FeStatus {
    guard(|| {
        let cfg = config_arg(config_json)?;
        let ds = prepared(dataset_ref(dataset)?, &cfg)?;
        let inner = Estimator::fit(&ds, &cfg.estimation)?;
        write_out(out, Box::into_raw(Box::new(FeEstimator { inner, dataset: ds })))
    })
}

unsafe fn estimate_with(est: &FeEstimator, query_json: *const c_char) -> Result<estimator::Estimate, Failure> {
    let json: serde_json::Value = serde_json::from_str(str_arg(query_json, "query_json")?)
        .map_err(|e| Failure(FeStatus::InvalidArgument, format!("query_json: {e}")))?;
    let (id, values) = est.dataset.query_from_json(&json)?;
    Ok(est.inner.estimate(&id, &values)?)
}

/// Estimates one query `{"id": ..., "values": {...}}`.
///
/// # Safety
/// `estimator` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fe_estimator_estimate(
    estimator: *const FeEstimator,
    query_json: *const c_char,
    out: *mut f64,
) -> FeStatus {
    guard(|| {
        let est = estimator.as_ref().ok_or_else(|| null("estimator"))?;
        write_out(out, estimate_with(est, query_json)?.value)
    })
}

/// Releases an estimator handle. Null is ignored.
///
/// # Safety
/// `estimator` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fe_estimator_free(estimator: *mut FeEstimator) {
    if !estimator.is_null() {
        drop(Box::from_raw(estimator));
    }
}

/// One-shot fit and estimate.
///
/// # Safety
/// `dataset` must be a live handle; `config_json` may be null.
#[no_mangle]
pub unsafe extern "C" fn fe_estimate(
    dataset: *const FeDataset,
    config_json: *const c_char,
    query_json: *const c_char,
    out: *mut f64,
) -> FeStatus {
    guard(|| {
        let cfg = config_arg(config_json)?;
        let ds = prepared(dataset_ref(dataset)?, &cfg)?;
        let est = FeEstimator {
            inner: Estimator::fit(&ds, &cfg.estimation)?,
            dataset: ds,
        };
        write_out(out, estimate_with(&est, query_json)?.value)
    })
}

/// One-shot estimate returning the full result (value, weights, analogs) as JSON.
///
/// # Safety
/// As [`fe_estimate`]; free the string with [`fe_string_free`].
#[no_mangle]
pub unsafe extern "C" fn fe_estimate_json(
    dataset: *const FeDataset,
    config_json: *const c_char,
    query_json: *const c_char,
    out: *mut *mut c_char,
) -> FeStatus {
    guard(|| {
        let cfg = config_arg(config_json)?;
        let ds = prepared(dataset_ref(dataset)?, &cfg)?;
        let est = FeEstimator {
            inner: Estimator::fit(&ds, &cfg.estimation)?,
            dataset: ds,
        };
        let e = estimate_with(&est, query_json)?;
        write_string(out, serde_json::to_string(&e).expect("estimate serializes"))
    })
}

unsafe fn run_loo(
    dataset: *const FeDataset,
    config_json: *const c_char,
) -> Result<evaluation::EvaluationReport, Failure> {
    let cfg = config_arg(config_json)?;
    let ds = prepared(dataset_ref(dataset)?, &cfg)?;
    let options = LooOptions {
        shared_partitions: cfg.shared_partitions,
        baselines: cfg.baselines,
    };
    Ok(evaluation::loo_evaluate(&ds, &cfg.estimation, options)?)
}

/// Leave-one-out MMRE (%) of the configured estimator.
///
/// # Safety
/// `dataset` must be a live handle; `config_json` may be null.
#[no_mangle]
pub unsafe extern "C" fn fe_evaluate_loo(
    dataset: *const FeDataset,
    config_json: *const c_char,
    out_mmre: *mut f64,
) -> FeStatus {
    guard(|| write_out(out_mmre, run_loo(dataset, config_json)?.mmre_percent))
}

/// Leave-one-out evaluation report as JSON.
///
/// # Safety
/// As [`fe_evaluate_loo`]; free the string with [`fe_string_free`].
#[no_mangle]
pub unsafe extern "C" fn fe_evaluate_loo_json(
    dataset: *const FeDataset,
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> FeStatus {
    guard(|| {
        let report = run_loo(dataset, config_json)?;
        write_string(out, serde_json::to_string(&report).expect("report serializes"))
    })
}

/// `|actual - estimated| / actual`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fe_mre(actual: f64, estimated: f64, out: *mut f64) -> FeStatus {
    guard(|| write_out(out, evaluation::mre(actual, estimated)?))
}

/// Mean of `len` MRE values, as a percentage.
///
/// # Safety
/// `mres` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn fe_mmre(mres: *const f64, len: usize, out: *mut f64) -> FeStatus {
    guard(|| write_out(out, evaluation::mmre(f64_slice(mres, len, "mres")?)?))
}

/// `a * size^(b + 0.01 * sum(distances)) * prod(multipliers)`.
///
/// # Safety
/// `distances` and `multipliers` must point to the given number of doubles
/// (either may be null when its length is 0).
#[no_mangle]
pub unsafe extern "C" fn fe_cocomo_adjusted(
    size: f64,
    distances: *const f64,
    n_distances: usize,
    multipliers: *const f64,
    n_multipliers: usize,
    a: f64,
    b: f64,
    out: *mut f64,
) -> FeStatus {
    guard(|| {
        if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
            return Err(Failure(
                FeStatus::InvalidArgument,
                format!("A and B must be positive, got {a} and {b}"),
            ));
        }
        let inputs = CocomoInputs::new(
            size,
            f64_slice(distances, n_distances, "distances")?.to_vec(),
            f64_slice(multipliers, n_multipliers, "multipliers")?.to_vec(),
        )?;
        write_out(out, estimator::estimate_cocomo_adjusted(&inputs, a, b))
    })
}
