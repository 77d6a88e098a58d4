//! Staged end-to-end runs driven by a TOML config.
//!
//! Every stage reads the artifacts of earlier stages from the run directory,
//! writes its own under `<stage>/`, and appends a record with file digests
//! and wall time to `manifest.json`.

mod config;
mod manifest;
mod report;
mod stages;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{
    BaselineConfig, BiasConfig, DataConfig, DesignConfig, DetectorConfig, FnnConfig, FnnGridConfig,
    GpConfig, HybridConfig, LabelingConfig, OracleConfig, PipelineConfig, SensitivityConfig,
    SurrogateConfig, SurrogateKind,
};
pub use manifest::{file_sha256, ArtifactRecord, RunLock, RunManifest, StageRecord, MANIFEST_FILE};
pub use report::{
    BaselineSummary, DetectionRow, ErrorRow, GpArtifact, HybridSummary, IdOodBoxes, LabelSummary,
    PcaSummary, PointRow, RunReport, RunTimings, SetLabels,
};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Doe,
    Train,
    Profile,
    Label,
    Detector,
    Hybrid,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Doe,
        Stage::Train,
        Stage::Profile,
        Stage::Label,
        Stage::Detector,
        Stage::Hybrid,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Doe => "doe",
            Stage::Train => "train",
            Stage::Profile => "profile",
            Stage::Label => "label",
            Stage::Detector => "detector",
            Stage::Hybrid => "hybrid",
            Stage::Report => "report",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Artifact bookkeeping for one stage.
pub(crate) struct StageContext<'a> {
    pub config: &'a PipelineConfig,
    pub dir: &'a Path,
    pub stage: Stage,
    artifacts: Vec<ArtifactRecord>,
}

impl<'a> StageContext<'a> {
    /// Path of an earlier stage's artifact, or a `MissingStage` error naming
    /// the command that produces it.
    pub fn input(&self, rel: &str, producer: Stage) -> Result<PathBuf> {
        let path = self.dir.join(rel);
        if path.is_file() {
            Ok(path)
        } else {
            Err(Error::MissingStage {
                stage: self.stage.name().into(),
                missing: rel.into(),
                prerequisite: producer.name().into(),
            })
        }
    }

    /// Target path for an output of this stage; the parent directory is created.
    pub fn output(&self, rel: &str) -> Result<PathBuf> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        Ok(path)
    }

    /// Digest a file written to [`StageContext::output`]`(rel)`.
    pub fn record(&mut self, rel: &str, deterministic: bool) -> Result<()> {
        let (sha256, bytes) = file_sha256(&self.dir.join(rel))?;
        self.artifacts.push(ArtifactRecord {
            path: rel.into(),
            sha256,
            bytes,
            deterministic,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T, deterministic: bool) -> Result<()> {
        crate::persist::write_json(self.output(rel)?, value)?;
        self.record(rel, deterministic)
    }

    pub fn write_csv<T: Serialize>(&mut self, rel: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_path(self.output(rel)?).map_err(csv_err)?;
        for r in rows {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush()?;
        self.record(rel, true)
    }
}

pub(crate) fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize()
        .map(|row| {
            row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })
        })
        .collect()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("csv: {other:?}")),
    }
}

/// Run one stage against `dir`, which is created if needed and locked for the
/// duration. `doe` starts a fresh manifest; later stages refuse a run
/// directory produced under a different config.
pub fn run_stage(config: &PipelineConfig, dir: &Path, stage: Stage) -> Result<StageRecord> {
    config.validate()?;
    std::fs::create_dir_all(dir)?;
    let _lock = RunLock::acquire(dir)?;
    let digest = config.digest()?;
    let mut manifest = if stage == Stage::Doe {
        RunManifest::new(digest)
    } else {
        let path = dir.join(MANIFEST_FILE);
        if !path.is_file() {
            return Err(Error::MissingStage {
                stage: stage.name().into(),
                missing: MANIFEST_FILE.into(),
                prerequisite: Stage::Doe.name().into(),
            });
        }
        let m = RunManifest::read(dir)?;
        if m.config_sha256 != digest {
            return Err(Error::Config(format!(
                "{} was produced with a different config (sha256 {}); rerun `doe` or use a fresh --out",
                dir.display(),
                m.config_sha256
            )));
        }
        m
    };
    let mut ctx = StageContext {
        config,
        dir,
        stage,
        artifacts: Vec::new(),
    };
    let start = Instant::now();
    stages::run(&mut ctx)?;
    let rec = StageRecord {
        stage,
        seconds: start.elapsed().as_secs_f64(),
        artifacts: ctx.artifacts,
    };
    manifest.record(rec.clone());
    manifest.write(dir)?;
    Ok(rec)
}

/// Every stage in order.
pub fn run_all(config: &PipelineConfig, dir: &Path) -> Result<RunManifest> {
    for stage in Stage::ALL {
        run_stage(config, dir, stage)?;
    }
    RunManifest::read(dir)
}
