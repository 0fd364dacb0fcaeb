//! Output records shared by the JSON and CSV emitters.

use std::io::{self, Write};

use lres_core::io::{complex_csv, complex_json, matrix_json};
use lres_core::{CMat, Error, C64};
use serde_json::{json, Map, Value};

use crate::args::Format;

#[derive(Debug, Clone)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Bool(bool),
    Text(String),
    Complex(C64),
    Matrix(CMat),
    Null,
}

impl Cell {
    fn json(&self) -> Value {
        match self {
            Cell::Int(n) => json!(n),
            Cell::Real(x) => json!(x),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Complex(z) => complex_json(*z),
            Cell::Matrix(m) => matrix_json(m),
            Cell::Null => Value::Null,
        }
    }

    /// `(column suffix, cell text)` pairs; matrices expand to `_ij` columns.
    fn csv(&self, name: &str) -> Vec<(String, String)> {
        match self {
            Cell::Matrix(m) => (0..m.nrows())
                .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| (format!("{name}_{}{}", i + 1, j + 1), complex_csv(m[(i, j)])))
                .collect(),
            other => {
                let text = match other {
                    Cell::Int(n) => n.to_string(),
                    Cell::Real(x) => format!("{x:.16e}"),
                    Cell::Bool(b) => b.to_string(),
                    Cell::Text(s) => csv_quote(s),
                    Cell::Complex(z) => complex_csv(*z),
                    Cell::Null | Cell::Matrix(_) => String::new(),
                };
                vec![(name.to_string(), text)]
            }
        }
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Record(pub Vec<(&'static str, Cell)>);

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &'static str, cell: Cell) -> Self {
        self.0.push((key, cell));
        self
    }

    pub fn push(&mut self, key: &'static str, cell: Cell) {
        self.0.push((key, cell));
    }

    /// A point record: index and lambda.
    pub fn at(index: usize, lambda: C64) -> Self {
        Self::new()
            .with("index", Cell::Int(index as u64))
            .with("lambda", Cell::Complex(lambda))
    }

    /// Append the structured form of an error.
    pub fn error(mut self, e: &Error) -> Self {
        self.push("error", Cell::Text(e.kind().to_string()));
        self.push("message", Cell::Text(e.to_string()));
        if let Error::SpectrumOfA0 { det, .. } | Error::SingularDenominator { det, .. } = e {
            self.push("det", Cell::Real(*det));
        }
        self
    }

    fn json(&self) -> Value {
        let mut map = Map::new();
        for (k, v) in &self.0 {
            map.insert((*k).to_string(), v.json());
        }
        Value::Object(map)
    }
}

/// Write `{"command": .., "records": [..]}` or a CSV table with one row per record.
pub fn emit(out: &mut impl Write, format: Format, command: &str, records: &[Record]) -> io::Result<()> {
    match format {
        Format::Json => {
            let doc = json!({
                "command": command,
                "records": records.iter().map(Record::json).collect::<Vec<_>>(),
            });
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)
        }
        Format::Csv => {
            let rows: Vec<Vec<(String, String)>> = records
                .iter()
                .map(|r| r.0.iter().flat_map(|(k, v)| v.csv(k)).collect())
                .collect();
            let mut header: Vec<String> = Vec::new();
            for row in &rows {
                for (k, _) in row {
                    if !header.contains(k) {
                        header.push(k.clone());
                    }
                }
            }
            writeln!(out, "{}", header.join(","))?;
            for row in rows {
                let line: Vec<&str> = header
                    .iter()
                    .map(|h| row.iter().find(|(k, _)| k == h).map_or("", |(_, v)| v.as_str()))
                    .collect();
                writeln!(out, "{}", line.join(","))?;
            }
            Ok(())
        }
    }
}
