use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{DesignSpace, OracleKind, OracleSpec};
use crate::detector::{GbdtConfig, OversampleConfig, OversampleMethod};
use crate::fnn::{FnnArchitecture, TrainConfig};
use crate::gp::GpFitConfig;
use crate::hybrid::RouterConfig;
use crate::sensitivity::PerturbationSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub design: DesignConfig,
    pub oracle: OracleConfig,
    pub data: DataConfig,
    pub surrogate: SurrogateConfig,
    pub fnn: Option<FnnConfig>,
    pub gp: Option<GpConfig>,
    pub sensitivity: SensitivityConfig,
    pub labeling: LabelingConfig,
    pub detector: DetectorConfig,
    pub baseline: BaselineConfig,
    pub hybrid: HybridConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub dims: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub kind: OracleKind,
    pub seed: u64,
    pub cost_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub train_seed: u64,
    pub test_seed: u64,
    /// Training points come from this sub-box; test points cover the full space.
    pub bias: BiasConfig,
}

/// The leading `dims` coordinates are restricted to `[lo, hi]` as fractions
/// of their range. `dims = 0` disables the bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasConfig {
    pub dims: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateKind {
    Fnn,
    Gp,
}

/// Validation errors are out-of-fold predictions over `validation_folds`
/// splits of the training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateConfig {
    pub kind: SurrogateKind,
    pub validation_folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FnnConfig {
    pub hidden: [usize; 3],
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub holdout_fraction: f64,
    pub seed: u64,
    /// When present, the fixed values above are replaced by the grid winner.
    pub grid: Option<FnnGridConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FnnGridConfig {
    pub hidden: Vec<[usize; 3]>,
    pub learning_rates: Vec<f64>,
    pub weight_decays: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub epochs: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub fit_noise: bool,
    pub max_fit_samples: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    pub delta: f64,
    pub n_perturb: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelingConfig {
    pub level: f64,
    pub resamples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub methods: Vec<OversampleMethod>,
    pub k: Vec<usize>,
    pub ratios: Vec<f64>,
    pub learning_rates: Vec<f64>,
    pub n_estimators: Vec<usize>,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub cv_folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub neighbors: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridConfig {
    pub risk_threshold: f64,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Hex SHA-256 of the canonical JSON form; formatting and comments in
    /// the source file do not affect it.
    pub fn digest(&self) -> Result<String> {
        let json = serde_json::to_vec(self)?;
        Ok(format!("{:x}", Sha256::digest(&json)))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.full_space()?;
        self.train_space()?;
        if self.data.n_train < 2 || self.data.n_test < 2 {
            return bad("data.n_train and data.n_test must be at least 2".into());
        }
        if !(self.oracle.cost_seconds > 0.0 && self.oracle.cost_seconds.is_finite()) {
            return bad("oracle.cost_seconds must be positive".into());
        }
        let k = self.surrogate.validation_folds;
        if k < 2 || k > self.data.n_train {
            return bad(format!("surrogate.validation_folds = {k} must lie in [2, n_train]"));
        }
        match self.surrogate.kind {
            SurrogateKind::Fnn => {
                let Some(fnn) = &self.fnn else {
                    return bad("surrogate.kind = \"fnn\" needs an [fnn] section".into());
                };
                self.fnn_architecture(fnn.hidden)?;
                fnn.train_config().validate().map_err(cfg)?;
                if let Some(g) = &fnn.grid {
                    if g.hidden.is_empty()
                        || g.learning_rates.is_empty()
                        || g.weight_decays.is_empty()
                        || g.batch_sizes.is_empty()
                        || g.epochs.is_empty()
                    {
                        return bad("every fnn.grid axis must be nonempty".into());
                    }
                    for h in &g.hidden {
                        self.fnn_architecture(*h)?;
                    }
                    for c in self.fnn_grid_configs(fnn, g) {
                        c.validate().map_err(cfg)?;
                    }
                }
            }
            SurrogateKind::Gp => {
                let Some(gp) = &self.gp else {
                    return bad("surrogate.kind = \"gp\" needs a [gp] section".into());
                };
                if gp.restarts == 0 {
                    return bad("gp.restarts must be positive".into());
                }
            }
        }
        self.perturbation().validate().map_err(cfg)?;
        let l = &self.labeling;
        if !(l.level > 0.0 && l.level < 1.0) || l.resamples < 100 {
            return bad("labeling.level must lie in (0, 1) and labeling.resamples be >= 100".into());
        }
        let d = &self.detector;
        if d.methods.is_empty() || d.k.is_empty() || d.ratios.is_empty() {
            return bad("detector oversampling axes must be nonempty".into());
        }
        if d.learning_rates.is_empty() || d.n_estimators.is_empty() {
            return bad("detector boosting axes must be nonempty".into());
        }
        for o in self.oversample_grid() {
            o.validate().map_err(cfg)?;
        }
        for g in self.gbdt_grid() {
            g.validate().map_err(cfg)?;
        }
        if d.cv_folds < 2 {
            return bad("detector.cv_folds must be at least 2".into());
        }
        if self.baseline.neighbors.is_empty() || self.baseline.neighbors.iter().any(|&n| n < 2) {
            return bad("baseline.neighbors must be nonempty with every entry >= 2".into());
        }
        self.router().validate().map_err(cfg)?;
        Ok(())
    }

    pub fn full_space(&self) -> Result<DesignSpace> {
        DesignSpace::uniform(self.design.dims, self.design.lo, self.design.hi).map_err(cfg)
    }

    pub fn train_space(&self) -> Result<DesignSpace> {
        let full = self.full_space()?;
        let b = &self.data.bias;
        if b.dims == 0 {
            return Ok(full);
        }
        full.restrict_leading(b.dims, b.lo, b.hi).map_err(cfg)
    }

    pub fn oracle_spec(&self) -> OracleSpec {
        OracleSpec {
            kind: self.oracle.kind,
            seed: self.oracle.seed,
            cost_seconds: self.oracle.cost_seconds,
        }
    }

    pub fn fnn_architecture(&self, hidden: [usize; 3]) -> Result<FnnArchitecture> {
        FnnArchitecture::new(self.design.dims, hidden).map_err(cfg)
    }

    pub(crate) fn fnn_grid_configs(&self, fnn: &FnnConfig, g: &FnnGridConfig) -> Vec<TrainConfig> {
        let mut out = Vec::new();
        for &learning_rate in &g.learning_rates {
            for &weight_decay in &g.weight_decays {
                for &batch_size in &g.batch_sizes {
                    for &epochs in &g.epochs {
                        out.push(TrainConfig {
                            learning_rate,
                            weight_decay,
                            batch_size,
                            epochs,
                            seed: fnn.seed,
                            holdout_fraction: fnn.holdout_fraction,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn gp_fit_config(&self) -> Option<GpFitConfig> {
        self.gp.map(|g| GpFitConfig {
            restarts: g.restarts,
            seed: g.seed,
            max_iters: g.max_iters,
            fit_noise: g.fit_noise,
            max_fit_samples: g.max_fit_samples,
        })
    }

    pub fn perturbation(&self) -> PerturbationSpec {
        PerturbationSpec {
            delta: self.sensitivity.delta,
            n_perturb: self.sensitivity.n_perturb,
            seed: self.sensitivity.seed,
        }
    }

    pub fn oversample_grid(&self) -> Vec<OversampleConfig> {
        let d = &self.detector;
        OversampleConfig::grid(&d.methods, &d.k, &d.ratios, d.seed)
    }

    pub fn gbdt_grid(&self) -> Vec<GbdtConfig> {
        let d = &self.detector;
        GbdtConfig::grid(&d.learning_rates, &d.n_estimators, d.seed)
            .into_iter()
            .map(|g| GbdtConfig {
                max_depth: d.max_depth,
                min_samples_leaf: d.min_samples_leaf,
                ..g
            })
            .collect()
    }

    pub fn router(&self) -> RouterConfig {
        RouterConfig {
            risk_threshold: self.hybrid.risk_threshold,
            perturbation: self.perturbation(),
        }
    }
}

impl FnnConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
            holdout_fraction: self.holdout_fraction,
        }
    }
}

fn cfg(e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::Config(m),
        other => other,
    }
}
