//! Design space, samples and preprocessing.

mod csvio;
mod lhs;
mod oracle;
mod split;

pub use csvio::{load_csv, save_csv};
pub use lhs::lhs_sample;
pub use oracle::{OracleKind, OracleSpec, DEFAULT_ORACLE_SECONDS};
pub use split::{kfold_split, stratified_kfold_split, Fold};

use serde::{Deserialize, Serialize};

use crate::{stats, Error, Result};

/// Axis-aligned box of admissible design vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpace {
    bounds: Vec<(f64, f64)>,
}

impl DesignSpace {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::invalid("design space needs at least one dimension"));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid(format!(
                    "dimension {i}: bounds [{lo}, {hi}] are not an increasing finite interval"
                )));
            }
        }
        Ok(DesignSpace { bounds })
    }

    /// `dims` copies of `[lo, hi]`.
    pub fn uniform(dims: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi); dims])
    }

    pub fn unit(dims: usize) -> Result<Self> {
        Self::uniform(dims, 0.0, 1.0)
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims()
            && x
                .iter()
                .zip(&self.bounds)
                .all(|(v, &(lo, hi))| *v >= lo && *v <= hi)
    }

    /// Sub-box whose first `dims` coordinates are restricted to the fraction
    /// `[lo_frac, hi_frac]` of their range. Used to manufacture selection bias
    /// in training designs.
    pub fn restrict_leading(&self, dims: usize, lo_frac: f64, hi_frac: f64) -> Result<Self> {
        if dims > self.dims() {
            return Err(Error::invalid(format!(
                "cannot restrict {dims} dimensions of a {}-dimensional space",
                self.dims()
            )));
        }
        if !(0.0..=1.0).contains(&lo_frac) || !(0.0..=1.0).contains(&hi_frac) || lo_frac >= hi_frac
        {
            return Err(Error::invalid(format!(
                "restriction fractions [{lo_frac}, {hi_frac}] must satisfy 0 <= lo < hi <= 1"
            )));
        }
        let bounds = self
            .bounds
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi))| {
                if i < dims {
                    (lo + lo_frac * (hi - lo), lo + hi_frac * (hi - lo))
                } else {
                    (lo, hi)
                }
            })
            .collect();
        Self::new(bounds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleSource {
    Oracle,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: f64,
    pub source: SampleSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub space: DesignSpace,
    pub samples: Vec<LabeledSample>,
    pub norm: Option<NormalizationStats>,
}

impl Dataset {
    pub fn new(space: DesignSpace, samples: Vec<LabeledSample>) -> Result<Self> {
        for s in &samples {
            crate::check_dim(space.dims(), s.x.len())?;
            if !s.y.is_finite() || s.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("samples must be finite"));
            }
        }
        Ok(Dataset {
            space,
            samples,
            norm: None,
        })
    }

    /// Evaluate the oracle at every point.
    pub fn from_oracle(space: DesignSpace, oracle: &OracleSpec, points: Vec<Vec<f64>>) -> Result<Self> {
        let samples = points
            .into_iter()
            .map(|x| {
                let y = oracle.eval(&x)?;
                Ok(LabeledSample {
                    x,
                    y,
                    source: SampleSource::Oracle,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.space.dims()
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.x.clone()).collect()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.y).collect()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            space: self.space.clone(),
            samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
            norm: self.norm.clone(),
        }
    }

    /// Fit normalization statistics on this dataset and attach them.
    pub fn fit_normalization(&mut self) -> Result<&NormalizationStats> {
        let stats = NormalizationStats::fit(&self.inputs(), &self.targets())?;
        Ok(self.norm.insert(stats))
    }

    /// Standardized inputs under the attached statistics.
    pub fn normalized_inputs(&self) -> Result<Vec<Vec<f64>>> {
        let norm = self
            .norm
            .as_ref()
            .ok_or_else(|| Error::invalid("dataset has no normalization statistics"))?;
        self.samples.iter().map(|s| norm.apply(&s.x)).collect()
    }
}

/// Per-dimension z-score parameters plus the raw target range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub y_min: f64,
    pub y_max: f64,
}

impl NormalizationStats {
    pub fn fit(inputs: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        if inputs.len() < 2 || inputs.len() != targets.len() {
            return Err(Error::invalid(
                "normalization needs at least two samples with matching targets",
            ));
        }
        let d = inputs[0].len();
        let mut mean = Vec::with_capacity(d);
        let mut std = Vec::with_capacity(d);
        let mut column = vec![0.0; inputs.len()];
        for j in 0..d {
            for (c, x) in column.iter_mut().zip(inputs) {
                crate::check_dim(d, x.len())?;
                *c = x[j];
            }
            let s = stats::population_std(&column);
            if !(s > 0.0) {
                return Err(Error::DegenerateInput { dim: j });
            }
            mean.push(stats::mean(&column));
            std.push(s);
        }
        let y_min = targets.iter().copied().fold(f64::INFINITY, f64::min);
        let y_max = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(y_max > y_min) {
            return Err(Error::DegenerateRange { y_min, y_max });
        }
        Ok(NormalizationStats {
            mean,
            std,
            y_min,
            y_max,
        })
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn y_range(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        crate::check_dim(self.dims(), x.len())?;
        Ok(x
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn denormalize(&self, z: &[f64]) -> Result<Vec<f64>> {
        crate::check_dim(self.dims(), z.len())?;
        Ok(z
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| v * s + m)
            .collect())
    }

    pub fn apply_all(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        xs.iter().map(|x| self.apply(x)).collect()
    }
}
