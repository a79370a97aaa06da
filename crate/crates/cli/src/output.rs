//! Run directories: atomic JSON and CSV writes and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// CSV float format: 17 significant digits.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub format: &'static str,
    /// Data rows (CSV, without the header) or `null` for JSON.
    pub rows: Option<usize>,
    pub columns: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    timestamp: String,
    parameters: &'a Value,
    config_digest: String,
    outputs: &'a [OutputEntry],
    summary: &'a Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub struct RunDir {
    pub path: PathBuf,
    outputs: Vec<OutputEntry>,
}

impl RunDir {
    pub fn create(path: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self { path, outputs: Vec::new() })
    }

    /// Default location `$HYPERBN_OUT/<command>-<digest prefix>`.
    pub fn default_path(command: &str, parameters: &Value) -> PathBuf {
        let root = std::env::var_os("HYPERBN_OUT").map_or_else(|| PathBuf::from("hyperbn-out"), PathBuf::from);
        let digest = sha256_hex(parameters.to_string().as_bytes());
        root.join(format!("{command}-{}", &digest[..12]))
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        atomic_write(&self.path.join(name), text.as_bytes())?;
        self.outputs.push(OutputEntry { path: name.into(), format: "json", rows: None, columns: None });
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            text.push_str(&row.join(","));
            text.push('\n');
        }
        atomic_write(&self.path.join(name), text.as_bytes())?;
        self.outputs.push(OutputEntry {
            path: name.into(),
            format: "csv",
            rows: Some(rows.len()),
            columns: Some(header.len()),
        });
        Ok(())
    }

    pub fn finish(self, manifest_name: &str, command: &str, parameters: &Value, summary: &Value) -> Result<()> {
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
            parameters,
            config_digest: sha256_hex(parameters.to_string().as_bytes()),
            outputs: &self.outputs,
            summary,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        atomic_write(&self.path.join(manifest_name), text.as_bytes())
    }
}

/// Reads a CSV written by [`RunDir::write_csv`] into named float columns.
pub fn read_csv_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().context("empty CSV")?.split(',').collect();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| header.iter().position(|h| h == n).with_context(|| format!("missing column {n}")))
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        for (c, &i) in idx.iter().enumerate() {
            let v: f64 = fields
                .get(i)
                .with_context(|| format!("row {} is short", lineno + 2))?
                .parse()
                .with_context(|| format!("bad number in row {}", lineno + 2))?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}
