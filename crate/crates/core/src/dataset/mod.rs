//! Historical project datasets: schema, records, cleaning and summary statistics.
//!
//! A [`Dataset`] is immutable once built. Attribute values are stored in schema
//! order; categorical values are held as indices into the attribute's ordered
//! term list so downstream fuzzification never re-parses labels.

mod arff;
mod csv_io;
mod profile;
mod rating;

pub use arff::parse_arff;
pub use csv_io::{parse_csv, read_schema_file, write_canonical_csv, SidecarSchema};
pub use profile::{LoadOptions, Preset};
pub use rating::canonical_rating;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected {expected} values, found {found}")]
    Arity { line: usize, expected: usize, found: usize },
    #[error("line {line}: unknown label '{label}' for attribute '{attribute}'")]
    UnknownLabel {
        line: usize,
        attribute: String,
        label: String,
    },
    #[error("line {line}: effort must be positive, got {value}")]
    NonPositiveEffort { line: usize, value: String },
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("project '{id}': {message}")]
    Project { id: String, message: String },
    #[error("no usable cases")]
    NoUsableCases,
    #[error("dataset is empty")]
    Empty,
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Kind of a project attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttributeKind {
    Numeric {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unit: Option<String>,
    },
    /// Ordered linguistic terms, lowest first.
    Categorical { terms: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    #[serde(flatten)]
    pub kind: AttributeKind,
}

impl AttributeSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        AttributeSchema {
            name: name.into(),
            kind: AttributeKind::Numeric { unit: None },
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, terms: impl IntoIterator<Item = S>) -> Self {
        AttributeSchema {
            name: name.into(),
            kind: AttributeKind::Categorical {
                terms: terms.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, AttributeKind::Categorical { .. })
    }

    pub fn terms(&self) -> Option<&[String]> {
        match &self.kind {
            AttributeKind::Categorical { terms } => Some(terms),
            AttributeKind::Numeric { .. } => None,
        }
    }

    /// Index of `label` in the term list, if categorical.
    pub fn term_index(&self, label: &str) -> Option<usize> {
        self.terms()?.iter().position(|t| t == label)
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.name.trim().is_empty() {
            return Err(DataError::Schema("attribute with empty name".into()));
        }
        if let AttributeKind::Categorical { terms } = &self.kind {
            if terms.is_empty() {
                return Err(DataError::Schema(format!(
                    "categorical attribute '{}' has no terms",
                    self.name
                )));
            }
            let mut seen = HashSet::new();
            for t in terms {
                if !seen.insert(t.as_str()) {
                    return Err(DataError::Schema(format!(
                        "duplicate term '{}' in attribute '{}'",
                        t, self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One attribute value of a project.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Numeric(f64),
    /// Index into the attribute's term list.
    Categorical(usize),
    Missing,
}

impl Value {
    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    pub fn as_numeric(&self) -> Option<f64> {
        match self {
            Value::Numeric(x) => Some(*x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    pub id: String,
    /// Values in schema order.
    pub values: Vec<Value>,
    pub actual_effort: f64,
}

impl Project {
    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|v| !v.is_missing())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    schema: Vec<AttributeSchema>,
    projects: Vec<Project>,
    effort_unit: String,
    effort_column: String,
    id_column: String,
}

impl Dataset {
    /// Builds a dataset, checking every schema and conformance invariant.
    pub fn new(
        name: impl Into<String>,
        schema: Vec<AttributeSchema>,
        projects: Vec<Project>,
        effort_unit: impl Into<String>,
    ) -> Result<Self, DataError> {
        let ds = Dataset {
            name: name.into(),
            schema,
            projects,
            effort_unit: effort_unit.into(),
            effort_column: "effort".into(),
            id_column: "id".into(),
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Records the source column names so canonical dumps reproduce them.
    pub fn with_columns(
        mut self,
        effort_column: impl Into<String>,
        id_column: impl Into<String>,
    ) -> Result<Self, DataError> {
        self.effort_column = effort_column.into();
        self.id_column = id_column.into();
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), DataError> {
        let mut names = HashSet::new();
        for attr in &self.schema {
            attr.validate()?;
            if !names.insert(attr.name.as_str()) {
                return Err(DataError::Schema(format!("duplicate attribute name '{}'", attr.name)));
            }
        }
        for column in [&self.effort_column, &self.id_column] {
            if names.contains(column.as_str()) {
                return Err(DataError::Schema(format!(
                    "column '{column}' clashes with an attribute name"
                )));
            }
        }
        if self.effort_column == self.id_column {
            return Err(DataError::Schema("effort and id columns share a name".into()));
        }
        let mut ids = HashSet::new();
        for p in &self.projects {
            if !ids.insert(p.id.as_str()) {
                return Err(DataError::Project {
                    id: p.id.clone(),
                    message: "duplicate project id".into(),
                });
            }
            self.check_values(&p.id, &p.values)?;
            if !(p.actual_effort > 0.0) || !p.actual_effort.is_finite() {
                return Err(DataError::Project {
                    id: p.id.clone(),
                    message: format!("actual effort must be positive, got {}", p.actual_effort),
                });
            }
        }
        Ok(())
    }

    /// Checks that `values` conform to this dataset's schema.
    pub fn check_values(&self, id: &str, values: &[Value]) -> Result<(), DataError> {
        let err = |message: String| DataError::Project {
            id: id.to_string(),
            message,
        };
        if values.len() != self.schema.len() {
            return Err(err(format!(
                "expected {} values, found {}",
                self.schema.len(),
                values.len()
            )));
        }
        for (attr, v) in self.schema.iter().zip(values) {
            match (&attr.kind, v) {
                (_, Value::Missing) => {}
                (AttributeKind::Numeric { .. }, Value::Numeric(x)) if x.is_finite() => {}
                (AttributeKind::Categorical { terms }, Value::Categorical(i)) if *i < terms.len() => {}
                _ => return Err(err(format!("value {:?} does not fit attribute '{}'", v, attr.name))),
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &[AttributeSchema] {
        &self.schema
    }

    pub fn projects(&self) -> &[Project] {
        &self.projects
    }

    pub fn effort_unit(&self) -> &str {
        &self.effort_unit
    }

    pub fn effort_column(&self) -> &str {
        &self.effort_column
    }

    pub fn id_column(&self) -> &str {
        &self.id_column
    }

    pub fn len(&self) -> usize {
        self.projects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projects.is_empty()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|a| a.name == name)
    }

    pub fn efforts(&self) -> impl Iterator<Item = f64> + '_ {
        self.projects.iter().map(|p| p.actual_effort)
    }

    pub fn incomplete_count(&self) -> usize {
        self.projects.iter().filter(|p| !p.is_complete()).count()
    }

    /// A copy holding only the projects selected by `keep`, in original order.
    pub fn filtered(&self, mut keep: impl FnMut(usize, &Project) -> bool) -> Dataset {
        Dataset {
            projects: self
                .projects
                .iter()
                .enumerate()
                .filter(|(i, p)| keep(*i, p))
                .map(|(_, p)| p.clone())
                .collect(),
            ..self.shallow_clone()
        }
    }

    /// A copy with every actual effort replaced by `f(effort)`.
    pub fn map_efforts(&self, f: impl Fn(f64) -> f64) -> Result<Dataset, DataError> {
        let ds = Dataset {
            projects: self
                .projects
                .iter()
                .map(|p| Project {
                    actual_effort: f(p.actual_effort),
                    ..p.clone()
                })
                .collect(),
            ..self.shallow_clone()
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Same schema, different projects.
    pub fn with_projects(&self, projects: Vec<Project>) -> Result<Dataset, DataError> {
        let ds = Dataset {
            projects,
            ..self.shallow_clone()
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Dataset {
        self.name = name.into();
        self
    }

    fn shallow_clone(&self) -> Dataset {
        Dataset {
            name: self.name.clone(),
            schema: self.schema.clone(),
            projects: Vec::new(),
            effort_unit: self.effort_unit.clone(),
            effort_column: self.effort_column.clone(),
            id_column: self.id_column.clone(),
        }
    }

    /// Renders a value for display or dumping. Missing renders as `?`.
    pub fn format_value(&self, attr: usize, value: &Value) -> String {
        match value {
            Value::Numeric(x) => x.to_string(),
            Value::Categorical(i) => self.schema[attr]
                .terms()
                .and_then(|t| t.get(*i))
                .cloned()
                .unwrap_or_default(),
            Value::Missing => "?".into(),
        }
    }

    /// Parses a query project from JSON: `{"id": "q", "values": {"kloc": 12, "rely": "h"}}`.
    /// Attributes absent from `values` (or `null`) are missing.
    pub fn query_from_json(&self, json: &serde_json::Value) -> Result<(String, Vec<Value>), DataError> {
        let bad = |m: String| DataError::Project {
            id: "query".into(),
            message: m,
        };
        let id = json
            .get("id")
            .map(|v| match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .unwrap_or_else(|| "query".into());
        let values = json
            .get("values")
            .and_then(|v| v.as_object())
            .ok_or_else(|| bad("expected an object field 'values'".into()))?;
        for key in values.keys() {
            if self.attribute_index(key).is_none() {
                return Err(bad(format!("unknown attribute '{key}'")));
            }
        }
        let mut out = Vec::with_capacity(self.schema.len());
        for attr in &self.schema {
            let v = match values.get(&attr.name) {
                None | Some(serde_json::Value::Null) => Value::Missing,
                Some(raw) => {
                    let text = match raw {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    parse_cell(attr, &text).map_err(&bad)?
                }
            };
            out.push(v);
        }
        self.check_values(&id, &out)?;
        Ok((id, out))
    }

    /// Parses query projects from headered CSV. Columns are attribute names plus
    /// optionally the id and effort columns (effort is ignored); empty cells are missing.
    pub fn queries_from_csv(&self, text: &str) -> Result<Vec<(String, Vec<Value>)>, DataError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| DataError::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        let mut out = Vec::new();
        for (ordinal, record) in reader.records().enumerate() {
            let line = ordinal + 2;
            let record = record.map_err(|e| DataError::Parse {
                line,
                message: e.to_string(),
            })?;
            let mut values = serde_json::Map::new();
            let mut id = format!("query{}", ordinal + 1);
            for (h, cell) in headers.iter().zip(record.iter()) {
                if h == self.id_column || h == "id" {
                    id = cell.to_string();
                } else if h != self.effort_column {
                    values.insert(h.to_string(), serde_json::Value::String(cell.to_string()));
                }
            }
            let json = serde_json::json!({"id": id, "values": values});
            out.push(self.query_from_json(&json).map_err(|e| match e {
                DataError::Project { message, .. } => DataError::Parse { line, message },
                other => other,
            })?);
        }
        Ok(out)
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} projects, {} attributes)",
            self.name,
            self.projects.len(),
            self.schema.len()
        )
    }
}

/// Parses one textual cell against its attribute. `?` and the empty string are missing.
pub(crate) fn parse_cell(attr: &AttributeSchema, raw: &str) -> Result<Value, String> {
    let token = raw.trim();
    if token.is_empty() || token == "?" {
        return Ok(Value::Missing);
    }
    match &attr.kind {
        AttributeKind::Numeric { .. } => token
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Value::Numeric)
            .ok_or_else(|| format!("'{}' is not a number (attribute '{}')", token, attr.name)),
        AttributeKind::Categorical { terms } => {
            if let Some(i) = terms.iter().position(|t| t == token) {
                return Ok(Value::Categorical(i));
            }
            // Rating scales accept any spelling that canonicalizes to a declared term.
            if let Some(c) = canonical_rating(token) {
                if let Some(i) = terms.iter().position(|t| t == c) {
                    return Ok(Value::Categorical(i));
                }
            }
            // Numeric-coded categories ("1" vs "1.0").
            if let Ok(x) = token.parse::<f64>() {
                if let Some(i) = terms
                    .iter()
                    .position(|t| t.parse::<f64>().map(|y| y == x).unwrap_or(false))
                {
                    return Ok(Value::Categorical(i));
                }
            }
            Err(format!("unknown label '{}' for attribute '{}'", token, attr.name))
        }
    }
}

/// Keeps only projects without missing values, preserving order.
pub fn drop_incomplete(dataset: &Dataset) -> Result<Dataset, DataError> {
    let cleaned = dataset.filtered(|_, p| p.is_complete());
    if cleaned.is_empty() {
        return Err(DataError::NoUsableCases);
    }
    Ok(cleaned)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttributeRange {
    Numeric {
        name: String,
        min: Option<f64>,
        max: Option<f64>,
        missing: usize,
    },
    Categorical {
        name: String,
        /// (term, count) in term order.
        counts: Vec<(String, usize)>,
        missing: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub dataset: String,
    pub project_count: usize,
    pub incomplete_count: usize,
    pub mean_actual_effort: f64,
    pub min_effort: f64,
    pub max_effort: f64,
    pub effort_unit: String,
    pub attributes: Vec<AttributeRange>,
}

pub fn summarize(dataset: &Dataset) -> Result<DatasetSummary, DataError> {
    if dataset.is_empty() {
        return Err(DataError::Empty);
    }
    let n = dataset.len();
    let sum: f64 = dataset.efforts().sum();
    let min = dataset.efforts().fold(f64::INFINITY, f64::min);
    let max = dataset.efforts().fold(f64::NEG_INFINITY, f64::max);
    // Rounding can push sum/n a hair outside the observed range.
    let mean = (sum / n as f64).clamp(min, max);

    let attributes = dataset
        .schema()
        .iter()
        .enumerate()
        .map(|(j, attr)| {
            let column = dataset.projects().iter().map(|p| p.values[j]);
            let missing = column.clone().filter(Value::is_missing).count();
            match &attr.kind {
                AttributeKind::Numeric { .. } => {
                    let nums: Vec<f64> = column.filter_map(|v| v.as_numeric()).collect();
                    AttributeRange::Numeric {
                        name: attr.name.clone(),
                        min: nums.iter().copied().reduce(f64::min),
                        max: nums.iter().copied().reduce(f64::max),
                        missing,
                    }
                }
                AttributeKind::Categorical { terms } => {
                    let mut counts: Vec<(String, usize)> = terms.iter().map(|t| (t.clone(), 0)).collect();
                    for v in column {
                        if let Value::Categorical(i) = v {
                            counts[i].1 += 1;
                        }
                    }
                    AttributeRange::Categorical {
                        name: attr.name.clone(),
                        counts,
                        missing,
                    }
                }
            }
        })
        .collect();

    Ok(DatasetSummary {
        dataset: dataset.name().to_string(),
        project_count: n,
        incomplete_count: dataset.incomplete_count(),
        mean_actual_effort: mean,
        min_effort: min,
        max_effort: max,
        effort_unit: dataset.effort_unit().to_string(),
        attributes,
    })
}

/// Loads a dataset from disk. `.arff` files are parsed directly; anything else is
/// read as headered CSV and requires a sidecar schema.
pub fn load_path(path: &Path, options: &LoadOptions, schema: Option<&SidecarSchema>) -> Result<Dataset, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let is_arff = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("arff"))
        .unwrap_or(false);
    if is_arff {
        parse_arff(&text, options)
    } else {
        let schema =
            schema.ok_or_else(|| DataError::Schema(format!("{}: CSV input needs a schema file", path.display())))?;
        parse_csv(&text, schema)
    }
}
