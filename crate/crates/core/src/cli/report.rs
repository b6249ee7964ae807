//! JSON reports with CSV side tables.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::Result;
use crate::random::GENERATOR;

/// One CSV table; column order is fixed by `header`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }
}

/// Shortest round-trip representation, scientific outside `[1e-4, 1e6)`, so
/// identical values print identically.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Report envelope shared by all subcommands.
pub fn envelope(
    command: &str,
    seed: Option<u64>,
    config: Value,
    wall: f64,
    pass: bool,
    results: Value,
) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "generator": GENERATOR,
        "seed": seed,
        "config": config,
        "wall_time_seconds": wall,
        "pass": pass,
        "results": results,
    })
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes the report and its tables and returns the paths written.
///
/// An `out` ending in `.csv` names the table (or, with several tables,
/// `<stem>.<table>.csv` each) and the JSON goes to `<stem>.json`. Any other
/// `out` receives the JSON, with tables at `<stem>.<table>.csv`.
pub fn emit_report(out: &Path, report: &Value, tables: &[Table]) -> Result<Vec<PathBuf>> {
    let is_csv = out.extension().is_some_and(|e| e == "csv");
    let stem = out.with_extension("");
    let json_path = if is_csv {
        with_suffix(&stem, ".json")
    } else {
        out.to_path_buf()
    };
    let mut written = Vec::new();
    std::fs::write(&json_path, serde_json::to_string_pretty(report)? + "\n")?;
    written.push(json_path);
    for table in tables {
        let path = if is_csv && tables.len() == 1 {
            out.to_path_buf()
        } else {
            with_suffix(&stem, &format!(".{}.csv", table.name))
        };
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
