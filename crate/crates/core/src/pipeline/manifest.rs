use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Stage;
use crate::{persist, Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
const LOCK_FILE: &str = ".lock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    /// Path relative to the run directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
    /// False for files holding wall-clock measurements.
    pub deterministic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub seconds: f64,
    pub artifacts: Vec<ArtifactRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_sha256: String,
    /// In pipeline order; re-running a stage drops the records after it.
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn new(config_sha256: String) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256,
            stages: Vec::new(),
        }
    }

    pub fn read(dir: &Path) -> Result<Self> {
        persist::read_json(dir.join(MANIFEST_FILE))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        persist::write_json(dir.join(MANIFEST_FILE), self)
    }

    pub fn record(&mut self, rec: StageRecord) {
        self.stages.retain(|s| s.stage < rec.stage);
        self.stages.push(rec);
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    pub fn artifacts(&self) -> impl Iterator<Item = &ArtifactRecord> {
        self.stages.iter().flat_map(|s| s.artifacts.iter())
    }

    /// Digest over `(path, sha256)` of every deterministic artifact, sorted by
    /// path. Equal across runs of the same config.
    pub fn numeric_digest(&self) -> String {
        let mut entries: Vec<(&str, &str)> = self
            .artifacts()
            .filter(|a| a.deterministic)
            .map(|a| (a.path.as_str(), a.sha256.as_str()))
            .collect();
        entries.sort_unstable();
        let mut h = Sha256::new();
        for (p, d) in entries {
            h.update(p.as_bytes());
            h.update([0]);
            h.update(d.as_bytes());
            h.update([b'\n']);
        }
        format!("{:x}", h.finalize())
    }
}

pub fn file_sha256(path: &Path) -> Result<(String, u64)> {
    let bytes = std::fs::read(path)?;
    Ok((format!("{:x}", Sha256::digest(&bytes)), bytes.len() as u64))
}

/// Exclusive ownership of a run directory, released on drop.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(RunLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(dir.to_path_buf())),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
