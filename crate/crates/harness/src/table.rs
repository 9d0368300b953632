//! Column tables written as CSV (17 significant digits) or JSON, and the profile reader.

use std::io::Read;

use serde_json::{json, Value};

use crate::config::Format;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Scientific notation with 17 significant digits, enough to round-trip any double.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        // writing to memory cannot fail
        w.write_record(&self.columns).unwrap();
        for row in &self.rows {
            let fields = row.iter().map(|c| match c {
                Cell::Num(v) => format_float(*v),
                Cell::Text(s) => s.clone(),
                Cell::Empty => String::new(),
            });
            w.write_record(fields).unwrap();
        }
        w.into_inner().unwrap()
    }

    pub fn to_json(&self) -> Vec<u8> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Array(
                    row.iter()
                        .map(|c| match c {
                            Cell::Num(v) => json!(v),
                            Cell::Text(s) => json!(s),
                            Cell::Empty => Value::Null,
                        })
                        .collect(),
                )
            })
            .collect();
        let mut out =
            serde_json::to_vec_pretty(&json!({ "columns": self.columns, "rows": rows })).unwrap();
        out.push(b'\n');
        out
    }

    pub fn encode(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Reads `coordinate` and `density` columns (in any position, other columns ignored)
/// from CSV with a header row.
pub fn read_profile_csv<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| HarnessError::Profile(e.to_string()))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Profile(format!("missing column {name:?}")))
    };
    let (ix, iy) = (find("coordinate")?, find("density")?);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::Profile(e.to_string()))?;
        let field = |i: usize, name: &str| -> Result<f64> {
            let s = rec.get(i).unwrap_or("");
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    HarnessError::Profile(format!(
                        "row {}: {name} {s:?} is not a finite number",
                        line + 1
                    ))
                })
        };
        x.push(field(ix, "coordinate")?);
        y.push(field(iy, "density")?);
    }
    if x.is_empty() {
        return Err(HarnessError::Profile("no data rows".into()));
    }
    Ok((x, y))
}
