//! ID/OOD labels from a bootstrap margin on validation errors.
//!
//! The margin is a percentile bootstrap interval for the upper error
//! quantile: each resample contributes its `level` quantile, and the interval
//! spans the `(1 - level) / 2` and `1 - (1 - level) / 2` percentiles of those
//! statistics. A sample is OOD when its error exceeds the interval's upper end.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{stats, Error, Result};

pub const DEFAULT_LEVEL: f64 = 0.99;
pub const DEFAULT_RESAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub resamples: usize,
    pub method: CiMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    BootstrapPercentileUpperQuantile,
}

/// Absolute residuals `|y - y_hat|` in raw target units.
pub fn absolute_errors(predictions: &[f64], targets: &[f64]) -> Result<Vec<f64>> {
    if predictions.len() != targets.len() {
        return Err(Error::invalid("predictions and targets differ in length"));
    }
    let errs: Vec<f64> = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (y - p).abs())
        .collect();
    if errs.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("non-finite prediction error"));
    }
    Ok(errs)
}

/// Bootstrap interval for the `level` quantile of `errors`.
///
/// Errors are sorted before resampling, so the result does not depend on
/// their order.
pub fn bootstrap_ci(errors: &[f64], level: f64, resamples: usize, seed: u64) -> Result<ConfidenceInterval> {
    if errors.len() < 2 {
        return Err(Error::invalid("bootstrap needs at least two errors"));
    }
    if resamples < 100 {
        return Err(Error::invalid("bootstrap needs at least 100 resamples"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("confidence level must lie in (0, 1)"));
    }
    if errors.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(Error::invalid("errors must be finite and nonnegative"));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut rng = stats::rng(seed);
    let mut counts = vec![0u32; n];
    let mut statistics = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        counts.fill(0);
        for _ in 0..n {
            counts[rng.gen_range(0..n)] += 1;
        }
        statistics.push(resample_quantile(&sorted, &counts, level));
    }
    statistics.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(ConfidenceInterval {
        lower: stats::quantile_sorted(&statistics, tail),
        upper: stats::quantile_sorted(&statistics, 1.0 - tail),
        level,
        resamples,
        method: CiMethod::BootstrapPercentileUpperQuantile,
    })
}

/// Linear-interpolation quantile of a resample given as multiplicities over
/// the sorted base sample.
fn resample_quantile(sorted: &[f64], counts: &[u32], q: f64) -> f64 {
    let n: usize = counts.iter().map(|&c| c as usize).sum();
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    let mut seen = 0usize;
    let mut lo_val = None;
    for (v, &c) in sorted.iter().zip(counts) {
        if c == 0 {
            continue;
        }
        seen += c as usize;
        if lo_val.is_none() && seen > lo {
            lo_val = Some(*v);
        }
        if seen > lo + 1 || (frac == 0.0 && lo_val.is_some()) {
            let a = lo_val.unwrap_or(*v);
            return a + frac * (v - a);
        }
    }
    *sorted.last().expect("nonempty sample")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodLabelSet {
    pub is_ood: Vec<bool>,
    pub ci: ConfidenceInterval,
    pub n_ood: usize,
    pub ratio: f64,
}

/// `is_ood[i] = errors[i] > ci.upper`.
pub fn label_ood(errors: &[f64], ci: &ConfidenceInterval) -> Result<OodLabelSet> {
    if errors.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let is_ood: Vec<bool> = errors.iter().map(|e| *e > ci.upper).collect();
    let n_ood = is_ood.iter().filter(|b| **b).count();
    Ok(OodLabelSet {
        ratio: n_ood as f64 / errors.len() as f64,
        is_ood,
        ci: *ci,
        n_ood,
    })
}
