//! Minimal ARFF reader: `@relation`, `@attribute` (numeric/real/integer and
//! nominal), `@data`, `?` for missing, `%` comment lines. Sparse rows and
//! string/date attributes are rejected.

use super::rating::as_rating_scale;
use super::{parse_cell, AttributeKind, AttributeSchema, DataError, Dataset, LoadOptions, Project};

enum Declared {
    Numeric,
    Nominal(Vec<String>),
}

struct RawAttribute {
    name: String,
    declared: Declared,
}

struct RawRow {
    line: usize,
    cells: Vec<String>,
}

pub fn parse_arff(text: &str, options: &LoadOptions) -> Result<Dataset, DataError> {
    let mut relation: Option<String> = None;
    let mut attributes: Vec<RawAttribute> = Vec::new();
    let mut rows: Vec<RawRow> = Vec::new();
    let mut in_data = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let err = |message: String| DataError::Parse { line: line_no, message };

        if in_data {
            if line.starts_with('{') {
                return Err(err("sparse ARFF rows are not supported".into()));
            }
            let cells = split_list(line).map_err(err)?;
            if cells.len() != attributes.len() {
                return Err(DataError::Arity {
                    line: line_no,
                    expected: attributes.len(),
                    found: cells.len(),
                });
            }
            rows.push(RawRow { line: line_no, cells });
            continue;
        }

        let (keyword, rest) = split_keyword(line);
        match keyword.to_ascii_lowercase().as_str() {
            "@relation" => {
                let (name, _) = take_name(rest).map_err(err)?;
                relation = Some(name);
            }
            "@attribute" => {
                let (name, type_spec) = take_name(rest).map_err(err)?;
                let type_spec = type_spec.trim();
                let declared = if let Some(body) = type_spec.strip_prefix('{') {
                    let body = body
                        .rfind('}')
                        .map(|end| &body[..end])
                        .ok_or_else(|| err(format!("unterminated nominal list for '{name}'")))?;
                    let labels = split_list(body).map_err(err)?;
                    if labels.is_empty() || labels.iter().any(|l| l.is_empty()) {
                        return Err(err(format!("empty nominal label in '{name}'")));
                    }
                    Declared::Nominal(labels)
                } else {
                    match type_spec.to_ascii_lowercase().as_str() {
                        "numeric" | "real" | "integer" => Declared::Numeric,
                        "" => return Err(err(format!("attribute '{name}' has no type"))),
                        other => return Err(err(format!("unsupported attribute type '{other}' for '{name}'"))),
                    }
                };
                attributes.push(RawAttribute { name, declared });
            }
            "@data" => {
                if attributes.is_empty() {
                    return Err(err("@data before any @attribute".into()));
                }
                in_data = true;
            }
            _ => return Err(err(format!("malformed header line '{line}'"))),
        }
    }

    if !in_data {
        return Err(DataError::Parse {
            line: text.lines().count(),
            message: "missing @data section".into(),
        });
    }

    build(relation, attributes, rows, options)
}

fn build(
    relation: Option<String>,
    attributes: Vec<RawAttribute>,
    rows: Vec<RawRow>,
    options: &LoadOptions,
) -> Result<Dataset, DataError> {
    let find = |wanted: &str| attributes.iter().position(|a| a.name.eq_ignore_ascii_case(wanted));

    let effort_idx = options.effort_columns.iter().find_map(|c| find(c)).ok_or_else(|| {
        DataError::Schema(format!(
            "no effort column found (looked for {})",
            options.effort_columns.join(", ")
        ))
    })?;
    if !matches!(attributes[effort_idx].declared, Declared::Numeric) {
        return Err(DataError::Schema(format!(
            "effort column '{}' is not numeric",
            attributes[effort_idx].name
        )));
    }
    let id_idx = match &options.id_column {
        Some(c) => Some(find(c).ok_or_else(|| DataError::Schema(format!("id column '{c}' not found")))?),
        None => None,
    };
    for c in options.exclude.iter().chain(&options.categorical) {
        if find(c).is_none() {
            return Err(DataError::Schema(format!("attribute '{c}' not found")));
        }
    }

    // (source column, schema entry) for every retained attribute.
    let mut columns: Vec<(usize, AttributeSchema)> = Vec::new();
    for (j, attr) in attributes.iter().enumerate() {
        if j == effort_idx || Some(j) == id_idx || options.exclude.iter().any(|e| e.eq_ignore_ascii_case(&attr.name)) {
            continue;
        }
        let forced = options.categorical.iter().any(|c| c.eq_ignore_ascii_case(&attr.name));
        let kind = match &attr.declared {
            Declared::Numeric if forced => AttributeKind::Categorical {
                terms: distinct_numeric_terms(&rows, j, &attr.name)?,
            },
            Declared::Numeric => AttributeKind::Numeric { unit: None },
            Declared::Nominal(labels) => AttributeKind::Categorical {
                terms: as_rating_scale(labels).unwrap_or_else(|| labels.clone()),
            },
        };
        columns.push((
            j,
            AttributeSchema {
                name: attr.name.clone(),
                kind,
            },
        ));
    }

    let mut projects = Vec::with_capacity(rows.len());
    for (ordinal, row) in rows.iter().enumerate() {
        let effort_raw = row.cells[effort_idx].as_str();
        let effort = match effort_raw.parse::<f64>() {
            Ok(e) if e > 0.0 && e.is_finite() => e,
            Ok(_) => {
                return Err(DataError::NonPositiveEffort {
                    line: row.line,
                    value: effort_raw.into(),
                })
            }
            Err(_) => {
                return Err(DataError::Parse {
                    line: row.line,
                    message: format!("effort '{effort_raw}' is not a positive number"),
                })
            }
        };
        let id = match id_idx {
            Some(i) => row.cells[i].clone(),
            None => (ordinal + 1).to_string(),
        };
        let mut values = Vec::with_capacity(columns.len());
        for (j, attr) in &columns {
            let cell = row.cells[*j].as_str();
            let v = parse_cell(attr, cell).map_err(|message| match attr.kind {
                AttributeKind::Categorical { .. } => DataError::UnknownLabel {
                    line: row.line,
                    attribute: attr.name.clone(),
                    label: cell.to_string(),
                },
                AttributeKind::Numeric { .. } => DataError::Parse {
                    line: row.line,
                    message,
                },
            })?;
            values.push(v);
        }
        projects.push(Project {
            id,
            values,
            actual_effort: effort,
        });
    }

    let name = options.name.clone().or(relation).unwrap_or_else(|| "dataset".into());
    let effort_column = attributes[effort_idx].name.clone();
    let id_column = match id_idx {
        Some(i) => attributes[i].name.clone(),
        None if find("id").is_some() => "_id".to_string(),
        None => "id".to_string(),
    };
    Dataset::new(
        name,
        columns.into_iter().map(|(_, a)| a).collect(),
        projects,
        options.effort_unit.clone(),
    )?
    .with_columns(effort_column, id_column)
}

fn distinct_numeric_terms(rows: &[RawRow], col: usize, name: &str) -> Result<Vec<String>, DataError> {
    let mut seen: Vec<f64> = Vec::new();
    for row in rows {
        let cell = row.cells[col].trim();
        if cell == "?" || cell.is_empty() {
            continue;
        }
        let x: f64 = cell.parse().map_err(|_| DataError::Parse {
            line: row.line,
            message: format!("'{cell}' is not a number (attribute '{name}')"),
        })?;
        if !seen.contains(&x) {
            seen.push(x);
        }
    }
    seen.sort_by(f64::total_cmp);
    if seen.is_empty() {
        return Err(DataError::Schema(format!("attribute '{name}' has no observed values")));
    }
    Ok(seen.into_iter().map(|x| x.to_string()).collect())
}

fn split_keyword(line: &str) -> (&str, &str) {
    match line.find(char::is_whitespace) {
        Some(i) => (&line[..i], line[i..].trim_start()),
        None => (line, ""),
    }
}

/// Reads a possibly quoted name; returns it with the remainder of the line.
fn take_name(s: &str) -> Result<(String, &str), String> {
    let s = s.trim_start();
    let mut chars = s.char_indices();
    match chars.next() {
        None => Err("missing name".into()),
        Some((_, q @ ('\'' | '"'))) => {
            let end = s[1..]
                .find(q)
                .ok_or_else(|| format!("unterminated quoted name in '{s}'"))?;
            Ok((s[1..1 + end].to_string(), &s[end + 2..]))
        }
        Some(_) => {
            let end = s.find(char::is_whitespace).unwrap_or(s.len());
            Ok((s[..end].to_string(), &s[end..]))
        }
    }
}

/// Splits a comma-separated list, honoring single/double quotes and backslash
/// escapes inside quotes. Tokens are trimmed and unquoted.
fn split_list(s: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut quote: Option<char> = None;
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        match quote {
            Some(q) => {
                if c == '\\' {
                    if let Some(next) = chars.next() {
                        current.push(next);
                    }
                } else if c == q {
                    quote = None;
                } else {
                    current.push(c);
                }
            }
            None => match c {
                '\'' | '"' if current.trim().is_empty() => {
                    current.clear();
                    quote = Some(c);
                }
                ',' => out.push(std::mem::take(&mut current).trim().to_string()),
                _ => current.push(c),
            },
        }
    }
    if quote.is_some() {
        return Err(format!("unterminated quote in '{s}'"));
    }
    out.push(current.trim().to_string());
    Ok(out)
}
