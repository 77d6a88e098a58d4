//! Pointwise local sensitivity profiles.
//!
//! For an input `x` a cloud of perturbations `dx ~ U(-delta, delta)^d` is drawn
//! and four statistics are computed over it:
//!
//! * `SA`: mean of `|f(x + dx) - f(x)|`
//! * `SV`: population variance of `|f(x + dx) - f(x)|`
//! * `JA`: Euclidean norm of the mean input gradient over the cloud
//! * `JV`: Euclidean norm of the elementwise population variance of those gradients
//!
//! All four share one cloud per point.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{check_dim, par_map, stats, Differentiable, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    /// Largest absolute per-coordinate perturbation, in standardized units.
    pub delta: f64,
    pub n_perturb: usize,
    pub seed: u64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec {
            delta: 0.05,
            n_perturb: 64,
            seed: 0,
        }
    }
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid("delta must be positive"));
        }
        if self.n_perturb < 2 {
            return Err(Error::invalid("n_perturb must be at least 2"));
        }
        Ok(())
    }

    /// Spec for the `index`-th point of a batch: seed is `seed ^ index`.
    pub fn for_point(&self, index: usize) -> Self {
        PerturbationSpec {
            seed: self.seed ^ index as u64,
            ..*self
        }
    }

    fn cloud(&self, dims: usize) -> Vec<Vec<f64>> {
        let mut rng = stats::rng(self.seed);
        (0..self.n_perturb)
            .map(|_| {
                (0..dims)
                    .map(|_| rng.gen_range(-self.delta..=self.delta))
                    .collect()
            })
            .collect()
    }
}

/// `[SA, SV, JA, JV]`; this order is the detector's feature contract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityProfile {
    pub sa: f64,
    pub sv: f64,
    pub ja: f64,
    pub jv: f64,
}

impl SensitivityProfile {
    pub const FEATURES: [&'static str; 4] = ["SA", "SV", "JA", "JV"];

    pub fn to_array(&self) -> [f64; 4] {
        [self.sa, self.sv, self.ja, self.jv]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        SensitivityProfile {
            sa: a[0],
            sv: a[1],
            ja: a[2],
            jv: a[3],
        }
    }
}

fn shifted(x: &[f64], dx: &[f64], buf: &mut [f64]) {
    for ((b, v), d) in buf.iter_mut().zip(x).zip(dx) {
        *b = v + d;
    }
}

fn deviation_over<M: Differentiable + ?Sized>(
    model: &M,
    x: &[f64],
    cloud: &[Vec<f64>],
) -> Result<(f64, f64)> {
    let f0 = model.predict(x)?;
    let mut buf = vec![0.0; x.len()];
    let devs = cloud
        .iter()
        .map(|dx| {
            shifted(x, dx, &mut buf);
            Ok((model.predict(&buf)? - f0).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((stats::mean(&devs), stats::population_variance(&devs)))
}

fn jacobian_over<M: Differentiable + ?Sized>(
    model: &M,
    x: &[f64],
    cloud: &[Vec<f64>],
) -> Result<(f64, f64)> {
    let d = x.len();
    let mut buf = vec![0.0; d];
    let mut grads = vec![vec![0.0; d]; cloud.len()];
    for (dx, g) in cloud.iter().zip(grads.iter_mut()) {
        shifted(x, dx, &mut buf);
        model.gradient_into(&buf, g)?;
    }
    let n = cloud.len() as f64;
    let mut mean = vec![0.0; d];
    for g in &grads {
        for (m, v) in mean.iter_mut().zip(g) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for g in &grads {
        for ((s, v), m) in var.iter_mut().zip(g).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= n);
    let norm = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>().sqrt();
    Ok((norm(&mean), norm(&var)))
}

/// `(SA, SV)` from the perturbation cloud of `spec`.
pub fn deviation_stats<M: Differentiable + ?Sized>(
    model: &M,
    x: &[f64],
    spec: &PerturbationSpec,
) -> Result<(f64, f64)> {
    spec.validate()?;
    check_dim(model.input_dim(), x.len())?;
    deviation_over(model, x, &spec.cloud(x.len()))
}

/// `(JA, JV)` from the perturbation cloud of `spec`.
pub fn jacobian_stats<M: Differentiable + ?Sized>(
    model: &M,
    x: &[f64],
    spec: &PerturbationSpec,
) -> Result<(f64, f64)> {
    spec.validate()?;
    check_dim(model.input_dim(), x.len())?;
    jacobian_over(model, x, &spec.cloud(x.len()))
}

pub fn profile<M: Differentiable + ?Sized>(
    model: &M,
    x: &[f64],
    spec: &PerturbationSpec,
) -> Result<SensitivityProfile> {
    spec.validate()?;
    check_dim(model.input_dim(), x.len())?;
    let cloud = spec.cloud(x.len());
    let (sa, sv) = deviation_over(model, x, &cloud)?;
    let (ja, jv) = jacobian_over(model, x, &cloud)?;
    Ok(SensitivityProfile { sa, sv, ja, jv })
}

/// Profiles in input order; point `i` uses [`PerturbationSpec::for_point`]`(i)`.
pub fn profile_batch<M: Differentiable + Sync + ?Sized>(
    model: &M,
    points: &[Vec<f64>],
    spec: &PerturbationSpec,
) -> Result<Vec<SensitivityProfile>> {
    spec.validate()?;
    par_map(points.len(), |i| profile(model, &points[i], &spec.for_point(i)))
        .into_iter()
        .collect()
}
