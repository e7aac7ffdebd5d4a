//! Rendering of records and tables.
//!
//! Every floating-point value is rounded to 12 significant digits before it
//! is written, so the JSON, text and CSV renderings of one result carry the
//! same numbers.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use crate::error::CliError;

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
    Csv,
}

/// `x` rounded to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().and_then(|x| Number::from_f64(round_sig(x))) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serializes `record` with all floats rounded.
pub fn rounded<T: Serialize>(record: &T) -> Result<Value, CliError> {
    let mut v = serde_json::to_value(record).map_err(|e| CliError::Numeric(format!("cannot encode output: {e}")))?;
    round_value(&mut v);
    Ok(v)
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), child, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

fn aligned(header: &[String], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    for r in rows {
        out.push_str(&line(r));
    }
    out
}

/// Renders a single record.
pub fn render_record<T: Serialize>(record: &T, format: Format) -> Result<String, CliError> {
    let v = rounded(record)?;
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(&v).expect("values are serializable") + "\n"),
        Format::Text => {
            let mut fields = Vec::new();
            flatten("", &v, &mut fields);
            let width = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            Ok(fields.iter().map(|(k, val)| format!("{k:<width$}  {val}\n")).collect())
        }
        Format::Csv => {
            let mut fields = Vec::new();
            flatten("", &v, &mut fields);
            let (header, row): (Vec<String>, Vec<String>) = fields.into_iter().unzip();
            csv_text(&header, &[row])
        }
    }
}

/// Renders rows of serializable records as a table, or as a JSON array.
pub fn render_rows<T: Serialize>(rows: &[T], format: Format) -> Result<String, CliError> {
    let v = rounded(&rows)?;
    if format == Format::Json {
        return Ok(serde_json::to_string_pretty(&v).expect("values are serializable") + "\n");
    }
    let items = v.as_array().cloned().unwrap_or_default();
    let header: Vec<String> = match items.first() {
        Some(Value::Object(map)) => map.keys().cloned().collect(),
        _ => Vec::new(),
    };
    let cells: Vec<Vec<String>> = items
        .iter()
        .map(|item| {
            let map = item.as_object().cloned().unwrap_or_else(Map::new);
            header.iter().map(|k| map.get(k).map(scalar).unwrap_or_default()).collect()
        })
        .collect();
    match format {
        Format::Csv => csv_text(&header, &cells),
        _ => Ok(aligned(&header, &cells)),
    }
}

/// Renders a table with an explicit header; cells are rounded like records.
pub fn render_table(header: &[&str], rows: Vec<Vec<Value>>, format: Format) -> Result<String, CliError> {
    let header: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    let mut rows = Value::Array(rows.into_iter().map(Value::Array).collect());
    round_value(&mut rows);
    let cells: Vec<Vec<String>> = rows
        .as_array()
        .map(|rs| rs.iter().map(|r| r.as_array().map(|c| c.iter().map(scalar).collect()).unwrap_or_default()).collect())
        .unwrap_or_default();
    match format {
        Format::Csv => csv_text(&header, &cells),
        Format::Text => Ok(aligned(&header, &cells)),
        Format::Json => {
            let objects: Vec<Value> = cells_to_objects(&header, &rows);
            Ok(serde_json::to_string_pretty(&objects).expect("values are serializable") + "\n")
        }
    }
}

fn cells_to_objects(header: &[String], rows: &Value) -> Vec<Value> {
    rows.as_array()
        .map(|rs| {
            rs.iter()
                .map(|r| {
                    let values = r.as_array().cloned().unwrap_or_default();
                    Value::Object(header.iter().cloned().zip(values).collect())
                })
                .collect()
        })
        .unwrap_or_default()
}
