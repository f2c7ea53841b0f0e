//! Run manifests and atomic artifact writing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use elmlab::spectral::CaptureReport;
use serde::{Deserialize, Serialize};

use crate::experiments::ExperimentSpec;

/// One seed's outcome inside a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub capture: CaptureReport,
    /// Wall time of the fit/train call alone, milliseconds.
    pub fit_wall_ms: f64,
    /// Numerical rank of the feature matrix (ELM runs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    /// Iteration at which the test verdict first passed (GD runs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged_at: Option<usize>,
    /// Iterations actually executed (GD runs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations_run: Option<usize>,
}

/// Everything one experiment produced, embedded spec included, so a manifest
/// alone is enough to reproduce or re-plot the run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub spec: ExperimentSpec,
    pub seed_reports: Vec<SeedReport>,
    pub median_rel_l2: f64,
    /// Majority capture verdict across seeds.
    pub verdict: bool,
    /// Seed whose rel_l2 is the median (lower seed wins ties); its
    /// predictions populate the CSV and plot.
    pub median_seed: u64,
    pub total_wall_ms: f64,
    /// Directory the artifacts live in; empty when nothing was persisted.
    pub artifact_dir: String,
    /// File names inside `artifact_dir`.
    pub artifacts: Vec<String>,
    pub tool_version: String,
    pub timestamp_unix_s: u64,
}

impl RunManifest {
    pub fn artifact_path(&self, name: &str) -> PathBuf {
        Path::new(&self.artifact_dir).join(name)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

pub fn tool_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

pub fn unix_timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Writes via a sibling temp file and rename, so readers and parallel sweeps
/// never observe a partial artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .context("artifact path has no file name")?;
    let tmp = dir.join(format!(".{file_name}.tmp"));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}
