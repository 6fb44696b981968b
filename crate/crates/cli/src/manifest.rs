//! Run manifests: the resolved parameters, input/output hashes, and summary
//! numbers of one experiment. Re-running a manifest reproduces every output
//! byte for byte; only the timestamp differs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use opuc_core::io::{self, ARTIFACT_VERSION};

use crate::config::Params;
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact_version: u32,
    pub tool: String,
    pub tool_version: String,
    #[serde(flatten)]
    pub params: Params,
    pub workers: usize,
    /// sha256 of each input file consumed
    pub inputs: BTreeMap<String, String>,
    /// sha256 of each artifact written
    pub outputs: BTreeMap<String, String>,
    /// set when the run completed with per-item numeric failures
    pub partial: bool,
    /// free-form summary numbers for the report command
    pub summary: serde_json::Map<String, serde_json::Value>,
    pub timestamp_unix: u64,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::other(format!("hashing {}: {e}", path.display())))?;
    let digest = Sha256::digest(&bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write;
        let _ = write!(out, "{b:02x}");
    }
    Ok(out)
}

impl Manifest {
    pub fn new(params: Params, workers: usize) -> Self {
        Manifest {
            artifact_version: ARTIFACT_VERSION,
            tool: "opuc-lab".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            params,
            workers,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            partial: false,
            summary: serde_json::Map::new(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) -> Result<(), CliError> {
        self.outputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn put_summary<T: Serialize>(&mut self, key: &str, value: T) {
        if let Ok(v) = serde_json::to_value(value) {
            self.summary.insert(key.into(), v);
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        io::write_json(path, self).map_err(|e| CliError::other(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let m: Manifest = io::read_json(path).map_err(|e| CliError::config(e.to_string()))?;
        Ok(m)
    }

    pub fn summary_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(|v| v.as_f64())
    }

    pub fn summary_bool(&self, key: &str) -> Option<bool> {
        self.summary.get(key).and_then(|v| v.as_bool())
    }
}

/// Output path helper: `<out_dir>/<stem>.<ext>`.
pub fn artifact_path(out_dir: &Path, stem: &str, ext: &str) -> PathBuf {
    out_dir.join(format!("{stem}.{ext}"))
}
