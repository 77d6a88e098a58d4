//! Two-component PCA of standardized feature rows, for projection plots.

use serde::{Deserialize, Serialize};

use crate::linalg::symmetric_eigen;
use crate::{check_dim, stats, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Fraction of total standardized variance per component.
    pub explained_variance_ratio: [f64; 2],
    /// Unit loading vectors; each is signed so its largest-magnitude entry is positive.
    pub loadings: [Vec<f64>; 2],
    pub coords: Vec<[f64; 2]>,
}

pub fn pca2(rows: &[Vec<f64>]) -> Result<PcaProjection> {
    if rows.len() < 2 {
        return Err(Error::invalid("PCA needs at least two rows"));
    }
    let d = rows[0].len();
    if d < 2 {
        return Err(Error::invalid("PCA needs at least two features"));
    }
    for r in rows {
        check_dim(d, r.len())?;
    }
    let n = rows.len();
    let mut mean = Vec::with_capacity(d);
    let mut std = Vec::with_capacity(d);
    for j in 0..d {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        mean.push(stats::mean(&col));
        std.push(stats::population_std(&col));
    }
    // constant columns standardize to zero
    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            (0..d)
                .map(|j| if std[j] > 0.0 { (r[j] - mean[j]) / std[j] } else { 0.0 })
                .collect()
        })
        .collect();
    let mut cov = vec![0.0; d * d];
    for r in &z {
        for a in 0..d {
            for b in 0..d {
                cov[a * d + b] += r[a] * r[b] / n as f64;
            }
        }
    }
    let (values, vectors) = symmetric_eigen(&cov, d);
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let mut loadings = [vectors[0].clone(), vectors[1].clone()];
    for l in loadings.iter_mut() {
        let pivot = l.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        if pivot < 0.0 {
            l.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let ratio = |v: f64| if total > 0.0 { v.max(0.0) / total } else { 0.0 };
    let coords = z
        .iter()
        .map(|r| {
            let dot = |l: &[f64]| r.iter().zip(l).map(|(a, b)| a * b).sum::<f64>();
            [dot(&loadings[0]), dot(&loadings[1])]
        })
        .collect();
    Ok(PcaProjection {
        mean,
        std,
        explained_variance_ratio: [ratio(values[0]), ratio(values[1])],
        loadings,
        coords,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::Rng;

    #[test]
    fn agrees_with_svd() {
        let mut rng = stats::rng(13);
        let rows: Vec<Vec<f64>> = (0..150)
            .map(|_| {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let b: f64 = rng.gen_range(-1.0..1.0);
                let c: f64 = rng.gen_range(-1.0..1.0);
                vec![a, 0.5 * a + 0.1 * c, 10.0 * b, rng.gen::<f64>() * 1e-3]
            })
            .collect();
        let p = pca2(&rows).unwrap();
        let z = DMatrix::from_fn(rows.len(), 4, |i, j| (rows[i][j] - p.mean[j]) / p.std[j]);
        let svd = z.clone().svd(true, true);
        let mut sv: Vec<(f64, usize)> = svd.singular_values.iter().copied().zip(0..).collect();
        sv.sort_by(|a, b| b.0.total_cmp(&a.0));
        let total: f64 = sv.iter().map(|s| s.0 * s.0).sum();
        let vt = svd.v_t.unwrap();
        for c in 0..2 {
            let want_ratio = sv[c].0 * sv[c].0 / total;
            assert!((p.explained_variance_ratio[c] - want_ratio).abs() < 1e-10);
            let v: Vec<f64> = (0..4).map(|j| vt[(sv[c].1, j)]).collect();
            let dot: f64 = v.iter().zip(&p.loadings[c]).map(|(a, b)| a * b).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-8);
        }
        assert!(p.explained_variance_ratio.iter().sum::<f64>() <= 1.0 + 1e-12);
        // coordinates are projections of the standardized rows
        let i = 17;
        let want: f64 = (0..4).map(|j| z[(i, j)] * p.loadings[1][j]).sum();
        assert!((p.coords[i][1] - want).abs() < 1e-12);
    }

    #[test]
    fn constant_column_is_ignored() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 3.0, (i * i) as f64]).collect();
        let p = pca2(&rows).unwrap();
        assert!(p.coords.iter().all(|c| c[0].is_finite()));
        assert!((p.explained_variance_ratio[0] + p.explained_variance_ratio[1] - 1.0).abs() < 1e-12);
    }
}
