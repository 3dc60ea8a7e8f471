//! Column-oriented numeric tables and their CSV form.

use std::fs;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Named numeric columns of equal length. Integer columns are written without
/// an exponent; all other values use 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    names: Vec<String>,
    integer: Vec<bool>,
    columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            integer: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.push_column(name.into(), values, false);
    }

    pub fn push_integer(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.push_column(name.into(), values, true);
    }

    fn push_column(&mut self, name: String, values: Vec<f64>, integer: bool) {
        if let Some(first) = self.columns.first() {
            assert_eq!(first.len(), values.len(), "column `{name}` has the wrong length");
        }
        self.names.push(name);
        self.integer.push(integer);
        self.columns.push(values);
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn column_at(&self, index: usize) -> &[f64] {
        &self.columns[index]
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.names).expect("in-memory write");
        for r in 0..self.rows() {
            let record: Vec<String> = self
                .columns
                .iter()
                .zip(&self.integer)
                .map(|(c, &int)| format_value(c[r], int))
                .collect();
            w.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        fs::write(path, self.to_csv()).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let names: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::Csv(e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| CliError::Csv(e.to_string()))?;
            for (col, field) in columns.iter_mut().zip(record.iter()) {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Csv(format!("row {}: `{field}` is not a number", line + 1)))?;
                col.push(v);
            }
        }
        let integer = vec![false; names.len()];
        Ok(Self {
            names,
            integer,
            columns,
        })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text)
    }
}

impl Default for Table {
    fn default() -> Self {
        Self::new()
    }
}

pub fn format_value(v: f64, integer: bool) -> String {
    if integer && v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.16e}")
    }
}
