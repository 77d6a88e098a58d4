//! Neighbor-deviation baseline: a prediction is suspect when the targets of
//! its nearest reference configurations disagree with it by a widely spread
//! amount.

use serde::{Deserialize, Serialize};

use crate::dataset::{kfold_split, Fold};
use crate::{check_dim, stats, Error, Result};

pub const NEIGHBOR_GRID: [usize; 5] = [4, 8, 12, 16, 20];
pub const SIGMA_PERCENTILE: f64 = 0.95;

/// Reference configurations in normalized input space with raw targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSet {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl ReferenceSet {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if inputs.len() != targets.len() {
            return Err(Error::invalid("reference inputs and targets differ in length"));
        }
        let d = inputs[0].len();
        for x in &inputs {
            check_dim(d, x.len())?;
        }
        Ok(ReferenceSet { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Indices of the `n` nearest references by Euclidean distance; equal
    /// distances are ordered by target, then index.
    pub fn nearest(&self, query: &[f64], n: usize) -> Result<Vec<usize>> {
        check_dim(self.inputs[0].len(), query.len())?;
        if n > self.len() {
            return Err(Error::invalid(format!(
                "reference set has {} points, fewer than {n} neighbors",
                self.len()
            )));
        }
        let mut d: Vec<(f64, usize)> = self
            .inputs
            .iter()
            .enumerate()
            .map(|(i, x)| (x.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let targets = &self.targets;
        d.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(targets[a.1].total_cmp(&targets[b.1]))
                .then(a.1.cmp(&b.1))
        });
        Ok(d[..n].iter().map(|p| p.1).collect())
    }
}

/// Population standard deviation of `|y_hat - y_j|` over the `n` nearest references.
pub fn neighbor_sigma(query: &[f64], prediction: f64, reference: &ReferenceSet, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("neighbor sigma needs at least two neighbors"));
    }
    let diffs: Vec<f64> = reference
        .nearest(query, n)?
        .into_iter()
        .map(|j| (prediction - reference.targets[j]).abs())
        .collect();
    Ok(stats::population_std(&diffs))
}

/// 95th percentile (linear interpolation) of validation sigmas.
pub fn calibrate_sigma_t(sigmas: &[f64]) -> Result<f64> {
    if sigmas.len() < 20 {
        return Err(Error::invalid("sigma calibration needs at least 20 values"));
    }
    Ok(stats::quantile(sigmas, SIGMA_PERCENTILE))
}

/// OOD iff `sigma >= sigma_t`.
pub fn baseline_detect(sigma: f64, sigma_t: f64) -> bool {
    sigma >= sigma_t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborTuning {
    pub n_neighbors: usize,
    /// Mean fold correlation per grid entry; constant sigma counts as -1.
    pub correlations: Vec<(usize, f64)>,
}

/// Picks `n` maximizing the Pearson correlation between sigma and absolute
/// error. Validation points are split into `k` folds; each fold's sigmas use
/// the training references plus the other folds. Ties go to the smaller `n`.
#[allow(clippy::too_many_arguments)]
pub fn baseline_tune_neighbors(
    train: &ReferenceSet,
    val_inputs: &[Vec<f64>],
    val_targets: &[f64],
    val_predictions: &[f64],
    grid: &[usize],
    k: usize,
    seed: u64,
) -> Result<NeighborTuning> {
    if grid.is_empty() {
        return Err(Error::invalid("neighbor grid is empty"));
    }
    let n_val = val_inputs.len();
    if n_val != val_targets.len() || n_val != val_predictions.len() {
        return Err(Error::invalid("validation inputs, targets and predictions differ in length"));
    }
    let folds = kfold_split(n_val, k, seed)?;
    let errors: Vec<f64> = val_predictions.iter().zip(val_targets).map(|(p, y)| (p - y).abs()).collect();
    let mut correlations = Vec::with_capacity(grid.len());
    for &n in grid {
        let mut total = 0.0;
        for fold in &folds {
            let mut inputs = train.inputs.clone();
            let mut targets = train.targets.clone();
            for &i in &fold.train {
                inputs.push(val_inputs[i].clone());
                targets.push(val_targets[i]);
            }
            let reference = ReferenceSet::new(inputs, targets)?;
            let sigmas = fold
                .validation
                .iter()
                .map(|&i| neighbor_sigma(&val_inputs[i], val_predictions[i], &reference, n))
                .collect::<Result<Vec<_>>>()?;
            let errs: Vec<f64> = fold.validation.iter().map(|&i| errors[i]).collect();
            total += stats::pearson(&sigmas, &errs).unwrap_or(-1.0);
        }
        correlations.push((n, total / folds.len() as f64));
    }
    let best = correlations
        .iter()
        .fold(None, |acc: Option<(usize, f64)>, &(n, c)| match acc {
            Some((bn, bc)) if bc > c || (bc == c && bn <= n) => acc,
            _ => Some((n, c)),
        })
        .expect("nonempty grid");
    Ok(NeighborTuning {
        n_neighbors: best.0,
        correlations,
    })
}

/// Sigmas for out-of-fold predictions: each point of `fold.validation` takes
/// its neighbors from `fold.train` only.
pub fn out_of_fold_sigmas(
    inputs: &[Vec<f64>],
    targets: &[f64],
    predictions: &[f64],
    folds: &[Fold],
    n: usize,
) -> Result<Vec<f64>> {
    if inputs.len() != targets.len() || inputs.len() != predictions.len() {
        return Err(Error::invalid("inputs, targets and predictions differ in length"));
    }
    let mut sigmas = vec![f64::NAN; inputs.len()];
    for fold in folds {
        let reference = ReferenceSet::new(
            fold.train.iter().map(|&i| inputs[i].clone()).collect(),
            fold.train.iter().map(|&i| targets[i]).collect(),
        )?;
        for &i in &fold.validation {
            sigmas[i] = neighbor_sigma(&inputs[i], predictions[i], &reference, n)?;
        }
    }
    if sigmas.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("folds do not cover every point"));
    }
    Ok(sigmas)
}

/// [`baseline_tune_neighbors`] for out-of-fold predictions on the training
/// set itself: one correlation over all points per grid entry.
pub fn baseline_tune_out_of_fold(
    inputs: &[Vec<f64>],
    targets: &[f64],
    predictions: &[f64],
    folds: &[Fold],
    grid: &[usize],
) -> Result<NeighborTuning> {
    if grid.is_empty() {
        return Err(Error::invalid("neighbor grid is empty"));
    }
    let errors: Vec<f64> = predictions.iter().zip(targets).map(|(p, y)| (p - y).abs()).collect();
    let mut correlations = Vec::with_capacity(grid.len());
    for &n in grid {
        let sigmas = out_of_fold_sigmas(inputs, targets, predictions, folds, n)?;
        correlations.push((n, stats::pearson(&sigmas, &errors).unwrap_or(-1.0)));
    }
    let best = correlations
        .iter()
        .fold(None, |acc: Option<(usize, f64)>, &(n, c)| match acc {
            Some((bn, bc)) if bc > c || (bc == c && bn <= n) => acc,
            _ => Some((n, c)),
        })
        .expect("nonempty grid");
    Ok(NeighborTuning {
        n_neighbors: best.0,
        correlations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn line_reference(targets: &[f64]) -> ReferenceSet {
        ReferenceSet::new((0..targets.len()).map(|i| vec![i as f64]).collect(), targets.to_vec()).unwrap()
    }

    #[test]
    fn hand_cases() {
        let r = line_reference(&[5.0; 6]);
        assert_eq!(neighbor_sigma(&[2.0], 5.0, &r, 4).unwrap(), 0.0);
        // diffs 1, 1, 3, 3 -> population std 1
        let r = line_reference(&[1.0, 3.0, -1.0, 5.0, 100.0]);
        assert!((neighbor_sigma(&[1.5], 2.0, &r, 4).unwrap() - 1.0).abs() < 1e-15);
        assert!(neighbor_sigma(&[0.0], 0.0, &r, 6).is_err());
    }

    #[test]
    fn knn_matches_exhaustive_sort() {
        let mut rng = crate::stats::rng(31);
        let xs: Vec<Vec<f64>> = (0..60).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
        let ys: Vec<f64> = (0..60).map(|_| rng.gen()).collect();
        let r = ReferenceSet::new(xs.clone(), ys).unwrap();
        for _ in 0..20 {
            let q: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
            let mut all: Vec<(f64, usize)> = xs
                .iter()
                .enumerate()
                .map(|(i, x)| ((0..3).map(|j| (x[j] - q[j]).powi(2)).sum::<f64>().sqrt(), i))
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let want: Vec<usize> = all[..8].iter().map(|p| p.1).collect();
            assert_eq!(r.nearest(&q, 8).unwrap(), want);
        }
    }

    #[test]
    fn permutation_invariant() {
        let mut rng = crate::stats::rng(8);
        let mut pairs: Vec<(Vec<f64>, f64)> = (0..40).map(|_| (vec![rng.gen(), rng.gen()], rng.gen())).collect();
        let r1 = ReferenceSet::new(pairs.iter().map(|p| p.0.clone()).collect(), pairs.iter().map(|p| p.1).collect()).unwrap();
        pairs.shuffle(&mut rng);
        let r2 = ReferenceSet::new(pairs.iter().map(|p| p.0.clone()).collect(), pairs.iter().map(|p| p.1).collect()).unwrap();
        let a = neighbor_sigma(&[0.5, 0.5], 0.3, &r1, 8).unwrap();
        let b = neighbor_sigma(&[0.5, 0.5], 0.3, &r2, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn percentile_threshold() {
        let vals: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        let t = calibrate_sigma_t(&vals).unwrap();
        assert!(t > 95.0 && t < 96.0);
        assert!(baseline_detect(t, t));
        assert!(!baseline_detect(t - 1e-12, t));
        let flagged = vals.iter().filter(|v| baseline_detect(**v, t)).count();
        assert!((4..=6).contains(&flagged));
        assert!(calibrate_sigma_t(&vals[..19]).is_err());
    }

    #[test]
    fn tuning_picks_informative_neighborhood() {
        // clusters of 5 on a line; each cluster's targets spread by its own
        // amplitude, so 4 neighbors stay in-cluster and track the error scale
        // while 20 neighbors blend unrelated clusters
        let mut rng = crate::stats::rng(3);
        let mut tx = Vec::new();
        let mut ty = Vec::new();
        let mut amps = Vec::new();
        for c in 0..40 {
            let amp = rng.gen_range(0.01..2.0);
            amps.push(amp);
            for j in 0..5 {
                tx.push(vec![c as f64 * 10.0 + j as f64 * 0.01]);
                ty.push(if j % 2 == 0 { amp } else { -amp });
            }
        }
        let train = ReferenceSet::new(tx, ty).unwrap();
        let vx: Vec<Vec<f64>> = (0..40).map(|c| vec![c as f64 * 10.0 + 0.02]).collect();
        let vy = vec![0.0; 40];
        let vp: Vec<f64> = amps.clone();
        let t = baseline_tune_neighbors(&train, &vx, &vy, &vp, &NEIGHBOR_GRID, 5, 1).unwrap();
        assert_eq!(t.n_neighbors, 4);
        assert_eq!(t.correlations.len(), 5);
        let one = baseline_tune_neighbors(&train, &vx, &vy, &vp, &[12], 5, 1).unwrap();
        assert_eq!(one.n_neighbors, 12);
    }

    #[test]
    fn pearson_identity() {
        let v = [0.3, 1.2, -0.7, 4.0];
        assert!((stats::pearson(&v, &v).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_fold_sigma_uses_only_the_other_folds() {
        let mut rng = crate::stats::rng(44);
        let xs: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x[0] + x[1]).collect();
        let preds: Vec<f64> = ys.iter().map(|y| y + rng.gen_range(-0.1..0.1)).collect();
        let folds = kfold_split(30, 3, 2).unwrap();
        let sig = out_of_fold_sigmas(&xs, &ys, &preds, &folds, 4).unwrap();
        for fold in &folds {
            for &i in &fold.validation {
                // brute force over the rows outside i's fold
                let mut d: Vec<(f64, f64, usize)> = fold
                    .train
                    .iter()
                    .map(|&j| (((xs[j][0] - xs[i][0]).powi(2) + (xs[j][1] - xs[i][1]).powi(2)).sqrt(), ys[j], j))
                    .collect();
                d.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let diffs: Vec<f64> = d[..4].iter().map(|t| (preds[i] - t.1).abs()).collect();
                assert!((sig[i] - stats::population_std(&diffs)).abs() < 1e-15);
            }
        }
        let t = baseline_tune_out_of_fold(&xs, &ys, &preds, &folds, &[2, 4]).unwrap();
        assert_eq!(t.correlations.len(), 2);
        assert!(baseline_tune_out_of_fold(&xs, &ys, &preds, &folds, &[]).is_err());
    }
}
