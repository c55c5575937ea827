//! Headered CSV with a JSON sidecar schema, and the canonical CSV dump.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{parse_cell, AttributeSchema, DataError, Dataset, Project};

/// Sidecar schema for CSV input.
///
/// ```json
/// {"name": "toy", "effort_column": "effort", "id_column": "id",
///  "effort_unit": "person-months",
///  "attributes": [{"name": "kloc", "kind": "numeric"},
///                 {"name": "rely", "kind": "categorical", "terms": ["l", "n", "h"]}]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarSchema {
    pub name: String,
    pub effort_column: String,
    /// When absent, projects are numbered from 1 in file order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id_column: Option<String>,
    #[serde(default = "default_unit")]
    pub effort_unit: String,
    pub attributes: Vec<AttributeSchema>,
}

fn default_unit() -> String {
    "person-months".into()
}

pub fn read_schema_file(path: &Path) -> Result<SidecarSchema, DataError> {
    let io = |message: String| DataError::Io {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| io(format!("invalid schema JSON: {e}")))
}

pub fn parse_csv(text: &str, schema: &SidecarSchema) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DataError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);

    let effort_col = column(&schema.effort_column)
        .ok_or_else(|| DataError::Schema(format!("missing effort column '{}'", schema.effort_column)))?;
    let id_col = match &schema.id_column {
        Some(c) => Some(column(c).ok_or_else(|| DataError::Schema(format!("missing id column '{c}'")))?),
        None => None,
    };
    let attr_cols: Vec<usize> = schema
        .attributes
        .iter()
        .map(|a| column(&a.name).ok_or_else(|| DataError::Schema(format!("missing column '{}'", a.name))))
        .collect::<Result<_, _>>()?;
    let known = attr_cols.len() + 1 + usize::from(id_col.is_some());
    if headers.len() != known {
        let extra: Vec<&str> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != effort_col && Some(*i) != id_col && !attr_cols.contains(i))
            .map(|(_, h)| h)
            .collect();
        return Err(DataError::Schema(format!(
            "columns not in schema: {}",
            extra.join(", ")
        )));
    }

    let mut projects = Vec::new();
    for (ordinal, record) in reader.records().enumerate() {
        let line = ordinal + 2;
        let record = record.map_err(|e| DataError::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(line),
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(DataError::Arity {
                line,
                expected: headers.len(),
                found: record.len(),
            });
        }
        let effort_raw = &record[effort_col];
        let actual_effort = match effort_raw.parse::<f64>() {
            Ok(e) if e > 0.0 && e.is_finite() => e,
            _ => {
                return Err(DataError::NonPositiveEffort {
                    line,
                    value: effort_raw.to_string(),
                })
            }
        };
        let values = schema
            .attributes
            .iter()
            .zip(&attr_cols)
            .map(|(attr, &c)| {
                parse_cell(attr, &record[c]).map_err(|message| {
                    if attr.is_categorical() {
                        DataError::UnknownLabel {
                            line,
                            attribute: attr.name.clone(),
                            label: record[c].to_string(),
                        }
                    } else {
                        DataError::Parse { line, message }
                    }
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        projects.push(Project {
            id: id_col
                .map(|c| record[c].to_string())
                .unwrap_or_else(|| (ordinal + 1).to_string()),
            values,
            actual_effort,
        });
    }

    let id_column = schema.id_column.clone().unwrap_or_else(|| "id".into());
    Dataset::new(
        schema.name.clone(),
        schema.attributes.clone(),
        projects,
        schema.effort_unit.clone(),
    )?
    .with_columns(schema.effort_column.clone(), id_column)
}

/// Dumps a dataset as canonical CSV (id, attributes in schema order, effort)
/// together with the sidecar schema that re-reads it losslessly. Missing
/// values are written as empty cells.
pub fn write_canonical_csv(dataset: &Dataset) -> (String, SidecarSchema) {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = vec![dataset.id_column()];
    header.extend(dataset.schema().iter().map(|a| a.name.as_str()));
    header.push(dataset.effort_column());
    writer.write_record(&header).expect("in-memory write");
    for p in dataset.projects() {
        let mut row = vec![p.id.clone()];
        for (j, v) in p.values.iter().enumerate() {
            row.push(if v.is_missing() {
                String::new()
            } else {
                dataset.format_value(j, v)
            });
        }
        row.push(p.actual_effort.to_string());
        writer.write_record(&row).expect("in-memory write");
    }
    let bytes = writer.into_inner().expect("in-memory flush");
    let schema = SidecarSchema {
        name: dataset.name().to_string(),
        effort_column: dataset.effort_column().to_string(),
        id_column: Some(dataset.id_column().to_string()),
        effort_unit: dataset.effort_unit().to_string(),
        attributes: dataset.schema().to_vec(),
    };
    (String::from_utf8(bytes).expect("csv output is utf-8"), schema)
}
