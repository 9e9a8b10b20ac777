//! Result tables and their CSV/JSON encodings.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::Format;
use crate::error::{HarnessError, Result};

/// Bumped whenever a column is added, removed, renamed or reordered.
pub const SCHEMA_VERSION: u32 = 1;

/// Metadata key that differs between otherwise identical runs.
pub const WALL_CLOCK_KEY: &str = "wall_clock_seconds";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
}

pub const fn col(name: &'static str, unit: &'static str) -> Column {
    Column { name, unit }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    /// CSV text; floats carry 17 significant digits so they round-trip.
    fn to_csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) if x.is_nan() => "nan".into(),
            Cell::Float(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        Cell::Float(x.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub schema: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(schema: Vec<Column>) -> Self {
        Self { schema, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.schema.len(), "row does not match the table schema");
        self.rows.push(row);
    }

    pub fn column_names(&self) -> Vec<&'static str> {
        self.schema.iter().map(|c| c.name).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub experiment: String,
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub version: &'static str,
    pub wall_clock_seconds: f64,
}

impl Metadata {
    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("experiment", self.experiment.clone()),
            ("schema_version", self.schema_version.to_string()),
            ("config_hash", self.config_hash.clone()),
            ("seed", self.seed.to_string()),
            ("version", self.version.to_string()),
            (WALL_CLOCK_KEY, format!("{:.3}", self.wall_clock_seconds)),
        ]
    }
}

pub fn encode(table: &Table, meta: &Metadata, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => encode_csv(table, meta),
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                metadata: &'a Metadata,
                schema: &'a [Column],
                rows: &'a [Vec<Cell>],
            }
            let mut out = serde_json::to_vec_pretty(&Doc { metadata: meta, schema: &table.schema, rows: &table.rows })
                .map_err(|e| HarnessError::Output(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

fn encode_csv(table: &Table, meta: &Metadata) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for (k, v) in meta.entries() {
        writeln!(out, "# {k}: {v}").expect("write to vec");
    }
    let units: Vec<&str> = table.schema.iter().map(|c| c.unit).collect();
    writeln!(out, "# units: {}", units.join(",")).expect("write to vec");
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| HarnessError::Output(e.to_string());
    w.write_record(table.column_names()).map_err(err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::to_csv)).map_err(err)?;
    }
    w.into_inner().map_err(|e| HarnessError::Output(e.to_string()))
}

pub fn write(path: &Path, table: &Table, meta: &Metadata, format: Format) -> Result<()> {
    let bytes = encode(table, meta, format)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| HarnessError::Io { path: parent.to_path_buf(), source: e })?;
    }
    fs::write(path, bytes).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })
}

/// Drops the wall-clock field so two outputs can be compared byte for byte.
pub fn without_wall_clock(text: &str) -> String {
    text.lines()
        .filter(|line| !line.contains(WALL_CLOCK_KEY))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Table, Metadata) {
        let mut t = Table::new(vec![col("time", "1"), col("distance", "1"), col("label", "")]);
        t.push(vec![Cell::from(0.1), Cell::from(1.0 / 3.0), Cell::from("a,b")]);
        t.push(vec![Cell::from(2usize), Cell::from(f64::NAN), Cell::from(true)]);
        let meta = Metadata {
            experiment: "x".into(),
            schema_version: SCHEMA_VERSION,
            config_hash: "abc".into(),
            seed: 7,
            version: "0.1.0",
            wall_clock_seconds: 1.25,
        };
        (t, meta)
    }

    #[test]
    fn csv_floats_round_trip() {
        let (t, meta) = sample();
        let text = String::from_utf8(encode(&t, &meta, Format::Csv).unwrap()).unwrap();
        let line = text.lines().find(|l| l.starts_with("1.0")).unwrap();
        let third: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(third, 1.0 / 3.0);
        assert!(text.contains("\"a,b\""));
        assert!(text.contains("# units: 1,1,\n"));
        assert!(text.contains("time,distance,label\n"));
    }

    #[test]
    fn json_has_schema_and_metadata() {
        let (t, meta) = sample();
        let v: serde_json::Value = serde_json::from_slice(&encode(&t, &meta, Format::Json).unwrap()).unwrap();
        assert_eq!(v["schema"][1]["name"], "distance");
        assert_eq!(v["metadata"]["seed"], 7);
        assert_eq!(v["rows"][0][1], 1.0 / 3.0);
    }

    #[test]
    fn wall_clock_is_stripped() {
        let (t, mut meta) = sample();
        let a = String::from_utf8(encode(&t, &meta, Format::Csv).unwrap()).unwrap();
        meta.wall_clock_seconds = 99.0;
        let b = String::from_utf8(encode(&t, &meta, Format::Csv).unwrap()).unwrap();
        assert_ne!(a, b);
        assert_eq!(without_wall_clock(&a), without_wall_clock(&b));
    }
}
