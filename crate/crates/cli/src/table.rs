//! CSV tables of experiment results.

use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Int(v) => v as f64,
            Value::Float(v) => v,
        }
    }

    fn render(self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Float(v) => format_float(v),
        }
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

/// Shortest representation that parses back to the same `f64`; exponent form
/// for very small or large magnitudes.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e6).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.headers.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c].as_f64()).collect())
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.render()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }

    /// Parses a numeric CSV; integral cells without a decimal point or
    /// exponent come back as [`Value::Int`].
    pub fn from_csv(text: &str, origin: &Path) -> CliResult<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .enumerate()
                .map(|(c, cell)| {
                    cell.parse::<i64>()
                        .map(Value::Int)
                        .or_else(|_| cell.parse::<f64>().map(Value::Float))
                        .map_err(|_| {
                            CliError::Io(format!(
                                "{}:{}: column `{}`: `{cell}` is not a number",
                                origin.display(),
                                line + 2,
                                headers.get(c).map_or("?", String::as_str)
                            ))
                        })
                })
                .collect::<CliResult<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Table { headers, rows })
    }
}
