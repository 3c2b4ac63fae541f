//! Artifact rendering. CSV floats use 17 significant digits in scientific
//! notation with a '.' decimal point.

use serde::Serialize;
use serde_json::Value;

use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) if x.is_nan() => "nan".to_string(),
            Cell::Float(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
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

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Text(String::new()), Cell::Float)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Result of one command before rendering.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub result: Value,
    pub table: Table,
    /// Set when a numerical check failed; the artifact is still written.
    pub failure: Option<String>,
}

impl Artifact {
    pub fn new(result: impl Serialize, table: Table) -> CliResult<Self> {
        Ok(Self { result: serde_json::to_value(result)?, table, failure: None })
    }
}

#[derive(Serialize)]
struct Document<'a> {
    tool: &'static str,
    version: &'a str,
    command: &'a str,
    seed: u64,
    params: &'a Value,
    result: &'a Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<&'a str>,
}

pub fn render_json(version: &str, command: &str, seed: u64, params: &Value, a: &Artifact) -> CliResult<String> {
    let doc = Document {
        tool: "entcost",
        version,
        command,
        seed,
        params,
        result: &a.result,
        failure: a.failure.as_deref(),
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

/// CSV with a leading `seed` column on every row.
pub fn render_csv(seed: u64, table: &Table) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["seed"];
    header.extend(table.columns.iter().copied());
    w.write_record(&header)?;
    for row in &table.rows {
        let mut rec = vec![seed.to_string()];
        rec.extend(row.iter().map(Cell::render));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
