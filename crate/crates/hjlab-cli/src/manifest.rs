//! Run manifests: per-operation results, pass flags and timings, written
//! atomically so a crashed run never leaves a manifest claiming success.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpResult {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub pass: bool,
}

impl OpResult {
    pub fn checked(name: &str, value: f64, margin: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            margin: Some(margin),
            stderr: None,
            pass: margin >= 0.0,
        }
    }

    pub fn info(name: &str, value: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            margin: None,
            stderr: None,
            pass: true,
        }
    }

    pub fn with_stderr(mut self, stderr: f64) -> Self {
        self.stderr = Some(stderr);
        self
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ParamsSummary {
    pub delta: f64,
    pub q: f64,
    pub sup_bound: f64,
    pub horizon: f64,
    pub tail_time: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub params: ParamsSummary,
    /// "ok" or "failed: <stage>"
    pub status: String,
    pub results: Vec<OpResult>,
    /// wall-clock milliseconds per stage; excluded from determinism checks
    pub timing_ms: BTreeMap<String, u128>,
}

impl RunManifest {
    pub fn all_pass(&self) -> bool {
        self.status == "ok" && self.results.iter().all(|r| r.pass)
    }

    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        write_atomic(path, json.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Write via a temporary sibling plus rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)
            .with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
