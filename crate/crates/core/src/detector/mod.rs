//! ID/OOD classification on sensitivity profiles.

mod baseline;
mod gbdt;
mod logistic;
mod metrics;
mod oversample;

use serde::{Deserialize, Serialize};

pub use baseline::{
    baseline_detect, baseline_tune_neighbors, baseline_tune_out_of_fold, calibrate_sigma_t,
    neighbor_sigma, out_of_fold_sigmas, NeighborTuning, ReferenceSet, NEIGHBOR_GRID, SIGMA_PERCENTILE,
};
pub use gbdt::{gbdt_train, DetectorModel, GbdtConfig, Node, Tree};
pub use logistic::{logistic_train, LogisticModel};
pub use metrics::{
    aupr, classification_report, pr_curve, report_from_predictions, ClassMetrics,
    ClassificationReport, PrCurve, PrPoint,
};
pub use oversample::{oversample, OversampleConfig, OversampleMethod, Oversampled};

use crate::dataset::stratified_kfold_split;
use crate::hybrid::RiskScorer;
use crate::sensitivity::SensitivityProfile;
use crate::{par_map, stats, Error, Result};

impl RiskScorer for DetectorModel {
    fn risk(&self, profile: &SensitivityProfile) -> Result<f64> {
        self.predict_proba(&profile.to_array())
    }
}

pub fn profile_features(profiles: &[SensitivityProfile]) -> Vec<Vec<f64>> {
    profiles.iter().map(|p| p.to_array().to_vec()).collect()
}

/// Oversamples the training rows, then fits the boosted trees on the profile
/// feature order.
pub fn train_detector(
    features: &[Vec<f64>],
    labels: &[bool],
    oversampling: &OversampleConfig,
    gbdt: &GbdtConfig,
) -> Result<DetectorModel> {
    let aug = oversample(features, labels, oversampling)?;
    gbdt_train(&aug.features, &aug.labels, &SensitivityProfile::FEATURES, gbdt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorCvRow {
    pub cell: usize,
    pub fold: usize,
    pub oversample: OversampleConfig,
    pub gbdt: GbdtConfig,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub aupr: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorTuning {
    pub oversample: OversampleConfig,
    pub gbdt: GbdtConfig,
    pub best_aupr: f64,
    pub cell_scores: Vec<Option<f64>>,
    /// `|grid| x k` rows, cell-major.
    pub table: Vec<DetectorCvRow>,
}

/// Stratified k-fold grid search maximizing mean validation AUPR. Oversampling
/// touches only the training part of each fold. Cells are oversampler-major
/// and ties go to the earlier cell.
pub fn detector_cv_tune(
    features: &[Vec<f64>],
    labels: &[bool],
    oversample_grid: &[OversampleConfig],
    gbdt_grid: &[GbdtConfig],
    k: usize,
    seed: u64,
) -> Result<DetectorTuning> {
    if oversample_grid.is_empty() || gbdt_grid.is_empty() {
        return Err(Error::invalid("detector grids must be nonempty"));
    }
    let folds = stratified_kfold_split(labels, k, seed)?;
    let cells: Vec<(OversampleConfig, GbdtConfig)> = oversample_grid
        .iter()
        .flat_map(|o| gbdt_grid.iter().map(move |g| (*o, *g)))
        .collect();
    let jobs = cells.len() * folds.len();
    let results: Vec<(usize, Result<f64>)> = par_map(jobs, |job| {
        let (ci, fi) = (job / folds.len(), job % folds.len());
        let (o, g) = &cells[ci];
        let fold = &folds[fi];
        let xs: Vec<Vec<f64>> = fold.train.iter().map(|&i| features[i].clone()).collect();
        let ys: Vec<bool> = fold.train.iter().map(|&i| labels[i]).collect();
        let o = OversampleConfig {
            seed: stats::derive_seed(o.seed, fi as u64),
            ..*o
        };
        let outcome = (|| {
            let aug = oversample(&xs, &ys, &o)?;
            let model = gbdt_train(&aug.features, &aug.labels, &SensitivityProfile::FEATURES, g)?;
            let scores = fold
                .validation
                .iter()
                .map(|&i| model.predict_proba(&features[i]))
                .collect::<Result<Vec<_>>>()?;
            let truth: Vec<bool> = fold.validation.iter().map(|&i| labels[i]).collect();
            Ok((aug.features.len(), pr_curve(&scores, &truth)?.aupr))
        })();
        match outcome {
            Ok((rows, a)) => (rows, Ok(a)),
            Err(e) => (xs.len(), Err(e)),
        }
    });

    let mut table = Vec::with_capacity(jobs);
    let mut cell_scores = Vec::with_capacity(cells.len());
    for (ci, (o, g)) in cells.iter().enumerate() {
        let mut sum = 0.0;
        let mut ok = true;
        for (fi, fold) in folds.iter().enumerate() {
            let (rows, r) = &results[ci * folds.len() + fi];
            let (aupr, error) = match r {
                Ok(a) => {
                    sum += a;
                    (Some(*a), None)
                }
                Err(e) => {
                    ok = false;
                    (None, Some(e.to_string()))
                }
            };
            table.push(DetectorCvRow {
                cell: ci,
                fold: fi,
                oversample: *o,
                gbdt: *g,
                train_rows: *rows,
                validation_rows: fold.validation.len(),
                aupr,
                error,
            });
        }
        cell_scores.push(ok.then(|| sum / folds.len() as f64));
    }
    let (best, best_aupr) = cell_scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| (i, s)))
        .fold(None, |acc: Option<(usize, f64)>, (i, s)| match acc {
            Some((_, b)) if b >= s => acc,
            _ => Some((i, s)),
        })
        .ok_or(Error::AllCellsFailed)?;
    Ok(DetectorTuning {
        oversample: cells[best].0,
        gbdt: cells[best].1,
        best_aupr,
        cell_scores,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy() -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = stats::rng(21);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..200 {
            let ood = i % 10 == 0;
            let ja = if ood { rng.gen_range(0.8..2.0) } else { rng.gen_range(0.0..1.0) };
            xs.push(vec![rng.gen::<f64>() * 0.1, rng.gen::<f64>() * 0.01, ja, rng.gen::<f64>()]);
            ys.push(ood);
        }
        (xs, ys)
    }

    #[test]
    fn single_cell_grid_and_table_shape() {
        let (xs, ys) = toy();
        let o = OversampleConfig { method: OversampleMethod::Smote, k: 5, ratio: 0.5, seed: 1 };
        let g = GbdtConfig { n_estimators: 30, ..Default::default() };
        let t = detector_cv_tune(&xs, &ys, &[o], &[g], 5, 3).unwrap();
        assert_eq!((t.oversample, t.gbdt), (o, g));
        assert_eq!(t.table.len(), 5);
        let total_val: usize = t.table.iter().map(|r| r.validation_rows).sum();
        assert_eq!(total_val, xs.len());
        for r in &t.table {
            assert!(r.train_rows > xs.len() - r.validation_rows);
        }
        assert!(t.best_aupr > 0.8);
    }

    #[test]
    fn grid_table_and_selection() {
        let (xs, ys) = toy();
        let os = OversampleConfig::grid(&[OversampleMethod::Smote, OversampleMethod::BorderlineSmote], &[5], &[0.5, 1.0], 2);
        let gs = GbdtConfig::grid(&[0.05, 0.2], &[20], 2);
        let t = detector_cv_tune(&xs, &ys, &os, &gs, 4, 3).unwrap();
        assert_eq!(t.table.len(), os.len() * gs.len() * 4);
        let best = t.cell_scores.iter().flatten().copied().fold(f64::MIN, f64::max);
        assert_eq!(best, t.best_aupr);
        let first = t.cell_scores.iter().position(|s| *s == Some(best)).unwrap();
        assert_eq!(t.oversample, os[first / gs.len()]);
    }

    #[test]
    fn detector_scores_profiles() {
        let (xs, ys) = toy();
        let o = OversampleConfig { method: OversampleMethod::BorderlineSmote, k: 5, ratio: 1.0, seed: 0 };
        let m = train_detector(&xs, &ys, &o, &GbdtConfig::default()).unwrap();
        assert_eq!(m.features, ["SA", "SV", "JA", "JV"]);
        let p = SensitivityProfile::from_array([0.05, 0.005, 1.9, 0.5]);
        assert!(m.risk(&p).unwrap() > 0.5);
        let p = SensitivityProfile::from_array([0.05, 0.005, 0.1, 0.5]);
        assert!(m.risk(&p).unwrap() < 0.5);
    }
}
