//! CSV and manifest helpers shared by the subcommands.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Open `-` as stdin, anything else as a file.
pub fn open_input(path: &str) -> Result<Box<dyn Read>, CliError> {
    if path == "-" {
        Ok(Box::new(std::io::stdin()))
    } else {
        let f = File::open(path)
            .map_err(|e| CliError::data(format!("cannot open input {path}: {e}")))?;
        Ok(Box::new(f))
    }
}

pub fn create_output(path: &Path) -> Result<BufWriter<File>, CliError> {
    let f = File::create(path)
        .map_err(|e| CliError::data(format!("cannot create output {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

/// Read a single named numeric column from a headered CSV file.
pub fn read_column(path: &str, column: &str) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::Reader::from_reader(open_input(path)?);
    let headers = reader.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| CliError::data(format!("{path}: no column named `{column}`")))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = record
            .get(idx)
            .ok_or_else(|| CliError::data(format!("{path}: short row")))?;
        let value: f64 = field
            .parse()
            .map_err(|_| CliError::data(format!("{path}: bad value `{field}` in `{column}`")))?;
        out.push(value);
    }
    Ok(out)
}

/// Sidecar path `<stem>_<suffix>.csv` next to `base`.
pub fn sibling_path(base: &Path, suffix: &str) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let mut name = format!("{stem}_{suffix}.csv");
    if let Some(parent) = base.parent() {
        let mut p = parent.to_path_buf();
        p.push(std::mem::take(&mut name));
        p
    } else {
        PathBuf::from(name)
    }
}

/// Run metadata written next to experiment outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub config: serde_json::Value,
    pub seed: u64,
    pub start_time: String,
    pub runtime_seconds: f64,
    pub version: String,
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let mut w = create_output(path)?;
    serde_json::to_writer_pretty(&mut w, manifest)
        .map_err(|e| CliError::data(format!("cannot write manifest: {e}")))?;
    writeln!(w)?;
    Ok(())
}
