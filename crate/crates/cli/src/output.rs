//! Atomic artifact writing and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::error::CliError;
use crate::table::{csv_field, RunOutput, Table};

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub cli_version: &'static str,
    pub core_version: &'static str,
    pub source: String,
    pub task: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub timestamp: String,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

/// Writes `bytes` to `dir/name` through a temporary file in the same
/// directory, so readers never observe a partial file.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileEntry, CliError> {
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(&path))?;
    tmp.as_file().sync_all().map_err(io_err(&path))?;
    tmp.persist(&path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e.error })?;
    Ok(FileEntry { name: name.to_string(), bytes: bytes.len(), sha256: sha256_hex(bytes) })
}

pub fn table_csv(t: &Table) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| CliError::Io { path: "<csv buffer>".into(), source: e.into() };
    w.write_record(&t.columns).map_err(wrap)?;
    for row in &t.rows {
        w.write_record(row.iter().map(csv_field)).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| CliError::Io { path: "<csv buffer>".into(), source: e.into_error() })
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("JSON values always serialize");
    b.push(b'\n');
    b
}

/// Writes every table in each selected format plus all JSON documents.
/// Returns the entries sorted by name.
pub fn write_outputs(dir: &Path, out: &RunOutput, formats: &[Format], config_text: &str) -> Result<Vec<FileEntry>, CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = vec![write_atomic(dir, "config.toml", config_text.as_bytes())?];
    for (name, t) in &out.tables {
        if formats.contains(&Format::Csv) {
            files.push(write_atomic(dir, &format!("{name}.csv"), &table_csv(t)?)?);
        }
        if formats.contains(&Format::Json) {
            files.push(write_atomic(dir, &format!("{name}.table.json"), &json_bytes(&t.to_json()))?);
        }
    }
    for (name, v) in &out.docs {
        files.push(write_atomic(dir, &format!("{name}.json"), &json_bytes(v))?);
    }
    files.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(files)
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> Result<PathBuf, CliError> {
    let v = serde_json::to_value(m).expect("manifest serializes");
    write_atomic(dir, "manifest.json", &json_bytes(&v))?;
    Ok(dir.join("manifest.json"))
}
