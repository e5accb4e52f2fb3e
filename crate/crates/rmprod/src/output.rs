//! Output documents: a table plus the resolved run configuration and a few
//! summary values, written as CSV or JSON and read back by [`parse_document`].
//!
//! CSV layout:
//!
//! ```text
//! # rmprod-output/1
//! # config: {...}
//! # meta: {...}
//! header,row
//! values,...
//! ```
//!
//! Reals are written with 17 significant digits; a missing value is an
//! empty CSV field or a JSON `null`.

use std::collections::BTreeMap;

use serde_json::{json, Map, Number, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub const FORMAT_TAG: &str = "rmprod-output/1";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Cell {
    /// A real, or `Missing` when not finite.
    pub fn real(x: f64) -> Self {
        if x.is_finite() {
            Self::Num(x)
        } else {
            Self::Missing
        }
    }

    pub fn text(s: impl Into<String>) -> Self {
        Self::Text(s.into())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Self::Num(x) => Some(*x),
            Self::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn to_csv(&self) -> String {
        match self {
            Self::Num(x) => format!("{x:.16e}"),
            Self::Int(i) => i.to_string(),
            Self::Bool(b) => b.to_string(),
            Self::Text(s) => s.clone(),
            Self::Missing => String::new(),
        }
    }

    fn from_csv(field: &str) -> Self {
        if field.is_empty() {
            return Self::Missing;
        }
        match field {
            "true" => return Self::Bool(true),
            "false" => return Self::Bool(false),
            _ => {}
        }
        let numeric = field.bytes().all(|b| b.is_ascii_digit() || matches!(b, b'+' | b'-' | b'.' | b'e' | b'E'));
        if numeric {
            if field.bytes().all(|b| b.is_ascii_digit() || b == b'-') {
                if let Ok(i) = field.parse() {
                    return Self::Int(i);
                }
            }
            if let Ok(x) = field.parse() {
                return Self::Num(x);
            }
        }
        Self::Text(field.to_string())
    }

    fn to_json(&self) -> Value {
        match self {
            Self::Num(x) => Number::from_f64(*x).map(Value::Number).unwrap_or(Value::Null),
            Self::Int(i) => Value::from(*i),
            Self::Bool(b) => Value::Bool(*b),
            Self::Text(s) => Value::String(s.clone()),
            Self::Missing => Value::Null,
        }
    }

    fn from_json(v: &Value) -> Result<Self, CliError> {
        Ok(match v {
            Value::Null => Self::Missing,
            Value::Bool(b) => Self::Bool(*b),
            Value::String(s) => Self::Text(s.clone()),
            Value::Number(n) if n.is_f64() => Self::Num(n.as_f64().unwrap_or(f64::NAN)),
            Value::Number(n) => Self::Int(n.as_i64().ok_or_else(|| CliError::Format(format!("integer {n} out of range")))?),
            other => return Err(CliError::Format(format!("unexpected cell {other}"))),
        })
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::real(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Self::Bool(b)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Self::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Self::Text(s.to_string())
    }
}

/// A table with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub config: RunConfig,
    pub meta: BTreeMap<String, Cell>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Document {
    pub fn new(config: RunConfig, columns: &[&str]) -> Self {
        Self { config, meta: BTreeMap::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<Cell>) {
        self.meta.insert(key.to_string(), value.into());
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn meta_json(&self) -> Value {
        Value::Object(self.meta.iter().map(|(k, v)| (k.clone(), v.to_json())).collect::<Map<_, _>>())
    }

    fn config_json(&self) -> Result<Value, CliError> {
        serde_json::to_value(&self.config).map_err(|e| CliError::Format(e.to_string()))
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut out = format!("# {FORMAT_TAG}\n");
        out.push_str(&format!("# config: {}\n", self.config_json()?));
        out.push_str(&format!("# meta: {}\n", self.meta_json()));
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Format(e.to_string());
        w.write_record(&self.columns).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv)).map_err(fail)?;
        }
        let body = w.into_inner().map_err(|e| CliError::Format(e.to_string()))?;
        out.push_str(&String::from_utf8(body).map_err(|e| CliError::Format(e.to_string()))?);
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::to_json).collect())).collect();
        let doc = json!({
            "format": FORMAT_TAG,
            "config": self.config_json()?,
            "meta": self.meta_json(),
            "columns": self.columns,
            "rows": rows,
        });
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Format(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }
}

fn parse_config(v: Value) -> Result<RunConfig, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::Format(format!("config: {e}")))
}

fn parse_meta(v: &Value) -> Result<BTreeMap<String, Cell>, CliError> {
    let obj = v.as_object().ok_or_else(|| CliError::Format("meta must be an object".into()))?;
    obj.iter().map(|(k, v)| Ok((k.clone(), Cell::from_json(v)?))).collect()
}

/// Reads a document written by [`Document::render`] in either format.
pub fn parse_document(text: &str) -> Result<Document, CliError> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_csv(text)
    }
}

fn parse_json(text: &str) -> Result<Document, CliError> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::Format(e.to_string()))?;
    if v.get("format").and_then(Value::as_str) != Some(FORMAT_TAG) {
        return Err(CliError::Format("missing format tag".into()));
    }
    let config = parse_config(v["config"].clone())?;
    let meta = parse_meta(&v["meta"])?;
    let columns: Vec<String> = serde_json::from_value(v["columns"].clone()).map_err(|e| CliError::Format(e.to_string()))?;
    let rows = v["rows"]
        .as_array()
        .ok_or_else(|| CliError::Format("rows must be an array".into()))?
        .iter()
        .map(|r| {
            let cells = r.as_array().ok_or_else(|| CliError::Format("row must be an array".into()))?;
            if cells.len() != columns.len() {
                return Err(CliError::Format("row length differs from header".into()));
            }
            cells.iter().map(Cell::from_json).collect()
        })
        .collect::<Result<_, _>>()?;
    Ok(Document { config, meta, columns, rows })
}

fn parse_csv(text: &str) -> Result<Document, CliError> {
    let mut lines = text.splitn(4, '\n');
    let tag = lines.next().unwrap_or_default();
    if tag.trim() != format!("# {FORMAT_TAG}") {
        return Err(CliError::Format("missing format tag".into()));
    }
    let header_json = |line: Option<&str>, key: &str| -> Result<Value, CliError> {
        let line = line.ok_or_else(|| CliError::Format(format!("missing {key} line")))?;
        let body = line
            .strip_prefix(&format!("# {key}: "))
            .ok_or_else(|| CliError::Format(format!("missing {key} line")))?;
        serde_json::from_str(body).map_err(|e| CliError::Format(format!("{key}: {e}")))
    };
    let config = parse_config(header_json(lines.next(), "config")?)?;
    let meta = parse_meta(&header_json(lines.next(), "meta")?)?;
    let body = lines.next().unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let columns: Vec<String> =
        reader.headers().map_err(|e| CliError::Format(e.to_string()))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Format(e.to_string()))?;
        rows.push(record.iter().map(Cell::from_csv).collect());
    }
    Ok(Document { config, meta, columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_cells() {
        assert_eq!(Cell::from_csv(&Cell::Num(0.1).to_csv()), Cell::Num(0.1));
        assert_eq!(Cell::Num(0.1).to_csv(), "1.0000000000000001e-1");
        assert_eq!(Cell::from_csv("-12"), Cell::Int(-12));
        assert_eq!(Cell::from_csv(""), Cell::Missing);
        assert_eq!(Cell::from_csv("point"), Cell::Text("point".into()));
        assert_eq!(Cell::from_csv("e"), Cell::Text("e".into()));
        assert_eq!(Cell::real(f64::NAN), Cell::Missing);
    }
}
