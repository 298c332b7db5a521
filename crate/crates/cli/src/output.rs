use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use trace_sketch::experiment::{Cell, Tabular};

use crate::args::Format;

/// Top-level JSON document shared by every command.
#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub formula_ids: Vec<String>,
    #[serde(flatten)]
    pub body: T,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(command: &'a str, seed: u64, formula_ids: Vec<String>, body: T) -> Self {
        Self {
            tool: "trace-sketch",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            formula_ids,
            body,
        }
    }
}

/// A CSV table with a fixed header.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn from_rows<R: Tabular>(rows: &[R]) -> Self {
        let mut t = Self::new(R::columns());
        t.rows = rows.iter().map(Tabular::cells).collect();
        t
    }

    /// Rows of `R` behind leading tag columns, one block per tag tuple.
    pub fn tagged<R: Tabular>(tag_columns: &[&str], blocks: &[(Vec<Cell>, Vec<R>)]) -> Self {
        let mut header = tag_columns.to_vec();
        header.extend_from_slice(R::columns());
        let mut t = Self::new(&header);
        for (tags, rows) in blocks {
            for r in rows {
                let mut cells = tags.clone();
                cells.extend(r.cells());
                t.rows.push(cells);
            }
        }
        t
    }

    /// Rows as JSON objects keyed by column name.
    pub fn to_json(&self) -> Vec<serde_json::Map<String, serde_json::Value>> {
        self.rows
            .iter()
            .map(|row| self.header.iter().cloned().zip(row.iter().map(cell_json)).collect())
            .collect()
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Doubles with 17 significant digits so values round-trip.
pub fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) if v.is_finite() => format!("{v:.16e}"),
        Cell::Float(v) if v.is_nan() => "NaN".into(),
        Cell::Float(v) if *v > 0.0 => "inf".into(),
        Cell::Float(_) => "-inf".into(),
        Cell::Text(s) => s.clone(),
    }
}

fn cell_json(c: &Cell) -> serde_json::Value {
    match c {
        Cell::Int(v) => (*v).into(),
        Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into),
        Cell::Text(s) => s.clone().into(),
    }
}

pub fn float(v: f64) -> Cell {
    Cell::Float(v)
}

pub fn int(v: impl TryInto<i64>) -> Cell {
    Cell::Int(v.try_into().unwrap_or(i64::MAX))
}

pub fn text(v: impl Into<String>) -> Cell {
    Cell::Text(v.into())
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_table(table: &Table, path: Option<&Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(path)?);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(format_cell))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes the JSON report or the CSV table, whichever `format` asks for.
pub fn emit<T: Serialize>(format: Format, report: &Report<'_, T>, table: &Table, path: Option<&Path>) -> Result<()> {
    match format {
        Format::Json => write_json(report, path),
        Format::Csv => write_table(table, path),
    }
}
