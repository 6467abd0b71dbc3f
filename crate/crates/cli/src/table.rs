//! Result tables and their CSV / JSON encodings.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub name: String,
    pub kind: String,
    /// SHA-256 of the normalised configuration, hex encoded.
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub metadata: Metadata,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultTable {
    pub fn new(metadata: Metadata, columns: Vec<String>) -> Self {
        ResultTable {
            metadata,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

fn out_err(e: impl std::fmt::Display) -> CliError {
    CliError::Output(e.to_string())
}

// Both `Display` and `LowerExp` print the shortest digits that round-trip.
fn number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// Writes the table. Numbers use the shortest representation that parses
/// back to the same `f64`. Non-finite values are written as `NaN`, `inf`
/// and `-inf` in CSV and as `null` in JSON.
pub fn write_table<W: Write>(table: &ResultTable, format: Format, mut out: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&table.columns).map_err(out_err)?;
            for row in &table.rows {
                w.write_record(row.iter().map(|&v| number(v))).map_err(out_err)?;
            }
            w.flush().map_err(out_err)?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, table).map_err(out_err)?;
            out.write_all(b"\n").map_err(out_err)?;
        }
    }
    Ok(())
}

/// Writes the table to `path`. CSV output gets a `<path>.meta.json`
/// sidecar with the metadata block.
pub fn emit(table: &ResultTable, format: Format, path: &Path) -> Result<()> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut buf = Vec::new();
    write_table(table, format, &mut buf)?;
    std::fs::write(path, buf).map_err(io)?;
    if format == Format::Csv {
        let mut side = path.as_os_str().to_owned();
        side.push(".meta.json");
        let side = std::path::PathBuf::from(side);
        let mut meta = serde_json::to_vec_pretty(&table.metadata).map_err(out_err)?;
        meta.push(b'\n');
        std::fs::write(&side, meta).map_err(|source| CliError::Io { path: side.clone(), source })?;
    }
    Ok(())
}

pub fn read_json(text: &str) -> Result<ResultTable> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        field: String::new(),
        message: e.to_string(),
    })
}

/// Reads a CSV table back; metadata is not part of the CSV body.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let columns = r.headers().map_err(out_err)?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(out_err)?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(out_err))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((columns, rows))
}
