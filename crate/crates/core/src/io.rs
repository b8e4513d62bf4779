//! Output plumbing: lossless float text, atomic file writes, digests and the
//! run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Writes `bytes` to `path` through a temporary sibling file and a rename, so
/// readers never observe a partially written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| LabError::io(&dir, e))?;
    let mut tmp = tempfile::Builder::new()
        .prefix(".rmf-tmp-")
        .tempfile_in(&dir)
        .map_err(|e| LabError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| LabError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| LabError::io(path, e))?;
    tmp.persist(path).map_err(|e| LabError::io(path, e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One data file written by a run, with its content digest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

/// Reproducibility manifest written next to every run's data.
///
/// Everything needed to rerun is here; `threads` and `wall_time` are
/// informational and do not affect results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub model: Option<String>,
    pub alpha: Option<f64>,
    #[serde(rename = "N")]
    pub limit: Option<u64>,
    pub trials: Option<u64>,
    pub base_seed: Option<u64>,
    pub prime_limit: Option<u64>,
    pub sigma_grid: Option<Vec<f64>>,
    pub tool_version: String,
    /// Seconds spent computing, before any output was written.
    pub wall_time: f64,
    #[serde(default)]
    pub sign_mode: Option<String>,
    /// Remaining subcommand parameters, enough to replay the run.
    #[serde(default)]
    pub parameters: serde_json::Map<String, serde_json::Value>,
    /// Engineering thresholds for statistical expectations, labelled as such.
    #[serde(default)]
    pub thresholds: serde_json::Map<String, serde_json::Value>,
    pub threads: usize,
    #[serde(default)]
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn new(experiment: impl Into<String>) -> Self {
        RunManifest {
            experiment: experiment.into(),
            model: None,
            alpha: None,
            limit: None,
            trials: None,
            base_seed: None,
            prime_limit: None,
            sigma_grid: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time: 0.0,
            sign_mode: None,
            parameters: serde_json::Map::new(),
            thresholds: serde_json::Map::new(),
            threads: 1,
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::Manifest(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Writes a manifest and then its data files into `dir`, all atomically.
///
/// The manifest lists the digest of every data file and lands on disk first.
pub fn write_run(dir: &Path, manifest: &mut RunManifest, files: &[(&str, Vec<u8>)]) -> Result<PathBuf> {
    manifest.outputs = files
        .iter()
        .map(|(name, bytes)| OutputFile {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        })
        .collect();
    let manifest_path = dir.join("manifest.json");
    write_atomic(&manifest_path, manifest.to_json().as_bytes())?;
    for (name, bytes) in files {
        write_atomic(&dir.join(name), bytes)?;
    }
    Ok(manifest_path)
}

/// Reads a numeric column from CSV text produced by this crate.
pub fn read_csv_column(text: &str, column: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| LabError::Manifest("empty CSV".into()))?;
    let idx = header
        .split(',')
        .position(|h| h == column)
        .ok_or_else(|| LabError::Manifest(format!("CSV has no column '{column}'")))?;
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let cell = l
                .split(',')
                .nth(idx)
                .ok_or_else(|| LabError::Manifest(format!("short CSV row '{l}'")))?;
            cell.parse::<f64>()
                .map_err(|_| LabError::Manifest(format!("bad number '{cell}'")))
        })
        .collect()
}
