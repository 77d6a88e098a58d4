use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate target range: y_max ({y_max}) must exceed y_min ({y_min})")]
    DegenerateRange { y_min: f64, y_max: f64 },

    #[error("input dimension {dim} has zero variance")]
    DegenerateInput { dim: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("oracle produced a non-finite value at {x:?}")]
    OracleNonFinite { x: Vec<f64> },

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("Cholesky factorization failed after {attempts} jitter escalations")]
    NotPositiveDefinite { attempts: usize },

    #[error("Gaussian-process fit failed: every restart was rejected")]
    GpFitFailed,

    #[error("need at least {needed} minority samples for k = {k}, found {found}; use a smaller k")]
    TooFewMinority { k: usize, needed: usize, found: usize },

    #[error("both classes must be present")]
    SingleClass,

    #[error("every grid cell failed")]
    AllCellsFailed,

    #[error("stage `{stage}` requires `{missing}`; run `{prerequisite}` first")]
    MissingStage {
        stage: String,
        missing: String,
        prerequisite: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("run directory {0} is locked by another process")]
    Locked(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
