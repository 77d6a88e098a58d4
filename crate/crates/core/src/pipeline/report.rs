use serde::{Deserialize, Serialize};

use crate::dataset::OracleKind;
use crate::detector::{ClassificationReport, NeighborTuning, PrPoint};
use crate::gp::{RbfKernel, RestartOutcome};
use crate::hybrid::{HybridTiming, RouteConfusion};
use crate::labeling::ConfidenceInterval;
use crate::stats::BoxStats;

use super::{Stage, SurrogateKind};

/// One row of the per-point CSV files. Profile columns are filled for network
/// surrogates, `gp_std` for Gaussian processes, `is_ood` once labeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub id: usize,
    pub prediction: f64,
    pub target: f64,
    pub error: f64,
    #[serde(rename = "SA")]
    pub sa: Option<f64>,
    #[serde(rename = "SV")]
    pub sv: Option<f64>,
    #[serde(rename = "JA")]
    pub ja: Option<f64>,
    #[serde(rename = "JV")]
    pub jv: Option<f64>,
    pub gp_std: Option<f64>,
    pub is_ood: Option<bool>,
}

impl PointRow {
    pub fn new(id: usize, prediction: f64, target: f64) -> Self {
        PointRow {
            id,
            prediction,
            target,
            error: (target - prediction).abs(),
            sa: None,
            sv: None,
            ja: None,
            jv: None,
            gp_std: None,
            is_ood: None,
        }
    }

    pub fn profile(&self) -> Option<[f64; 4]> {
        Some([self.sa?, self.sv?, self.ja?, self.jv?])
    }
}

/// Kernel hyperparameters of a fitted GP; the model is rebuilt by
/// conditioning on the stored training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpArtifact {
    pub kernel: RbfKernel,
    pub restarts: Vec<RestartOutcome>,
    pub best_restart: usize,
    pub log_marginal_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetLabels {
    pub ci: ConfidenceInterval,
    pub n: usize,
    pub n_ood: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub validation: SetLabels,
    pub test: SetLabels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub tuning: NeighborTuning,
    pub sigma_t: f64,
    /// Share of validation points at or above `sigma_t`.
    pub validation_flag_ratio: f64,
    pub test: ClassificationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub n: usize,
    pub nrmse: f64,
    pub mean_abs_error: f64,
    pub ci: ConfidenceInterval,
    pub n_ood: usize,
    pub pct_ood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub method: String,
    pub aupr: Option<f64>,
    pub report: ClassificationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdOodBoxes {
    pub id: Option<BoxStats>,
    pub ood: Option<BoxStats>,
}

impl IdOodBoxes {
    pub fn split(values: &[f64], is_ood: &[bool]) -> Self {
        let pick = |want: bool| -> Vec<f64> {
            values
                .iter()
                .zip(is_ood)
                .filter(|(_, o)| **o == want)
                .map(|(v, _)| *v)
                .collect()
        };
        IdOodBoxes {
            id: BoxStats::from_values(&pick(false)),
            ood: BoxStats::from_values(&pick(true)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaSummary {
    pub explained_variance_ratio: [f64; 2],
    pub loadings: [Vec<f64>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridSummary {
    pub risk_threshold: f64,
    pub n_surrogate: usize,
    pub n_oracle: usize,
    pub nrmse_pure: f64,
    pub nrmse_hybrid: f64,
    pub decr_err: Option<f64>,
    pub confusion: RouteConfusion,
}

/// Numeric run summary: error margins and OOD ratios per set, detection
/// quality of the profile classifier and the neighbor baseline, hybrid error,
/// and the data behind the ID/OOD box plots, profile projection and PR curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub surrogate: SurrogateKind,
    pub oracle: OracleKind,
    pub validation: ErrorRow,
    pub test: ErrorRow,
    pub detection: Vec<DetectionRow>,
    pub hybrid: HybridSummary,
    /// Test-set profile features split by label, keyed by feature name.
    pub profile_boxes: Option<Vec<(String, IdOodBoxes)>>,
    pub pca: Option<PcaSummary>,
    /// Test-set GP predictive mean and standard deviation split by label.
    pub gp_mean_boxes: Option<IdOodBoxes>,
    pub gp_std_boxes: Option<IdOodBoxes>,
    pub pr_curve: Option<Vec<PrPoint>>,
}

/// Wall-clock side of the report: per-stage seconds and hybrid speedups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTimings {
    pub stages: Vec<(Stage, f64)>,
    pub hybrid: HybridTiming,
}
