//! SMOTE and Borderline-SMOTE minority oversampling.
//!
//! Neighbor searches run on per-feature z-scores of the input set so that
//! features on very different scales count equally; synthetic points are
//! interpolated in the original units (the two segments coincide under the
//! affine map).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{stats, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OversampleMethod {
    Smote,
    /// Seeds restricted to minority points whose k-neighborhood is at least
    /// half, but not entirely, majority.
    BorderlineSmote,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OversampleConfig {
    pub method: OversampleMethod,
    pub k: usize,
    /// Target minority/majority count ratio after resampling.
    pub ratio: f64,
    pub seed: u64,
}

impl OversampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("oversampling k must be at least 1"));
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return Err(Error::invalid("oversampling ratio must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn grid(methods: &[OversampleMethod], ks: &[usize], ratios: &[f64], seed: u64) -> Vec<Self> {
        let mut out = Vec::new();
        for &method in methods {
            for &k in ks {
                for &ratio in ratios {
                    out.push(OversampleConfig { method, k, ratio, seed });
                }
            }
        }
        out
    }

    pub fn full_grid(seed: u64) -> Vec<Self> {
        Self::grid(
            &[OversampleMethod::Smote, OversampleMethod::BorderlineSmote],
            &[5, 10, 15],
            &[0.25, 0.5, 0.75, 1.0],
            seed,
        )
    }
}

/// Resampled set: the input rows in order, followed by synthetic minority rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Oversampled {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub n_synthetic: usize,
    /// Borderline-SMOTE found no danger points and seeded from every minority row.
    pub fell_back_to_all: bool,
}

fn scaled(features: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = features[0].len();
    let mut out = features.to_vec();
    for j in 0..d {
        let col: Vec<f64> = features.iter().map(|f| f[j]).collect();
        let (m, s) = (stats::mean(&col), stats::population_std(&col));
        let s = if s > 0.0 { s } else { 1.0 };
        for row in out.iter_mut() {
            row[j] = (row[j] - m) / s;
        }
    }
    out
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` rows of `pool` nearest to `query`, excluding `skip`.
fn nearest(query: &[f64], pool: &[usize], rows: &[Vec<f64>], skip: usize, k: usize) -> Vec<usize> {
    let mut cand: Vec<(f64, usize)> = pool
        .iter()
        .filter(|&&j| j != skip)
        .map(|&j| (dist2(query, &rows[j]), j))
        .collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cand.truncate(k);
    cand.into_iter().map(|c| c.1).collect()
}

pub fn oversample(features: &[Vec<f64>], labels: &[bool], config: &OversampleConfig) -> Result<Oversampled> {
    config.validate()?;
    if features.len() != labels.len() {
        return Err(Error::invalid("features and labels differ in length"));
    }
    let positives = labels.iter().filter(|l| **l).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    let minority_label = positives * 2 <= labels.len();
    let minority: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == minority_label).collect();
    let majority_count = labels.len() - minority.len();
    let target = (config.ratio * majority_count as f64 - 1e-9).ceil() as usize;
    let mut out = Oversampled {
        features: features.to_vec(),
        labels: labels.to_vec(),
        n_synthetic: 0,
        fell_back_to_all: false,
    };
    if minority.len() >= target {
        return Ok(out);
    }
    if minority.len() < config.k + 1 {
        return Err(Error::TooFewMinority {
            k: config.k,
            needed: config.k + 1,
            found: minority.len(),
        });
    }
    let rows = scaled(features);
    let all: Vec<usize> = (0..labels.len()).collect();
    let neighbors: Vec<Vec<usize>> = minority
        .iter()
        .map(|&i| nearest(&rows[i], &minority, &rows, i, config.k))
        .collect();
    let mut seeds: Vec<usize> = (0..minority.len()).collect();
    if config.method == OversampleMethod::BorderlineSmote {
        seeds.retain(|&m| {
            let i = minority[m];
            let nn = nearest(&rows[i], &all, &rows, i, config.k);
            let majority = nn.iter().filter(|&&j| labels[j] != minority_label).count();
            2 * majority >= nn.len() && majority < nn.len()
        });
        if seeds.is_empty() {
            seeds = (0..minority.len()).collect();
            out.fell_back_to_all = true;
        }
    }
    let mut rng = stats::rng(config.seed);
    let needed = target - minority.len();
    for s in 0..needed {
        let m = seeds[s % seeds.len()];
        let a = &features[minority[m]];
        let b = &features[neighbors[m][rng.gen_range(0..neighbors[m].len())]];
        let u: f64 = rng.gen_range(f64::EPSILON..1.0);
        out.features.push(a.iter().zip(b).map(|(x, y)| x + u * (y - x)).collect());
        out.labels.push(minority_label);
    }
    out.n_synthetic = needed;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(method: OversampleMethod, k: usize, ratio: f64) -> OversampleConfig {
        OversampleConfig { method, k, ratio, seed: 7 }
    }

    fn clusters() -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = stats::rng(1);
        let mut f = Vec::new();
        let mut l = Vec::new();
        for _ in 0..80 {
            f.push(vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]);
            l.push(false);
        }
        for _ in 0..12 {
            f.push(vec![rng.gen_range(0.8..1.6), rng.gen_range(0.8..1.6)]);
            l.push(true);
        }
        (f, l)
    }

    /// Collinear with and between the endpoints, within 1e-9.
    fn on_segment(p: &[f64], a: &[f64], b: &[f64]) -> bool {
        let ab = [b[0] - a[0], b[1] - a[1]];
        let ap = [p[0] - a[0], p[1] - a[1]];
        let cross = ab[0] * ap[1] - ab[1] * ap[0];
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let t = (ab[0] * ap[0] + ab[1] * ap[1]) / len2;
        cross.abs() < 1e-9 && t > -1e-9 && t < 1.0 + 1e-9
    }

    #[test]
    fn satisfied_ratio_is_noop() {
        let (f, l) = clusters();
        let o = oversample(&f, &l, &cfg(OversampleMethod::Smote, 5, 0.1)).unwrap();
        assert_eq!(o.n_synthetic, 0);
        assert_eq!(o.features, f);
    }

    #[test]
    fn synthetic_points_lie_on_minority_segments() {
        let (f, l) = clusters();
        for method in [OversampleMethod::Smote, OversampleMethod::BorderlineSmote] {
            let o = oversample(&f, &l, &cfg(method, 5, 1.0)).unwrap();
            assert_eq!(o.features[..f.len()], f[..]);
            let minority: Vec<&Vec<f64>> = f.iter().zip(&l).filter(|p| *p.1).map(|p| p.0).collect();
            let syn = &o.features[f.len()..];
            assert_eq!(syn.len(), 80 - 12);
            assert!(o.labels[f.len()..].iter().all(|b| *b));
            for p in syn {
                let ok = minority.iter().any(|a| minority.iter().any(|b| a != b && on_segment(p, a, b)));
                assert!(ok, "{p:?} not on a minority segment");
            }
            let pos = o.labels.iter().filter(|b| **b).count();
            assert!(pos as f64 / (o.labels.len() - pos) as f64 >= 1.0);
        }
    }

    #[test]
    fn ratio_is_met() {
        let (f, l) = clusters();
        for r in [0.25, 0.5, 0.75] {
            let o = oversample(&f, &l, &cfg(OversampleMethod::Smote, 5, r)).unwrap();
            let pos = o.labels.iter().filter(|b| **b).count();
            assert!(pos as f64 / 80.0 >= r);
            assert!((pos as f64 - 1.0) / 80.0 < r);
        }
    }

    #[test]
    fn too_few_minority() {
        let f: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let l: Vec<bool> = (0..20).map(|i| i < 3).collect();
        assert!(matches!(
            oversample(&f, &l, &cfg(OversampleMethod::Smote, 5, 1.0)),
            Err(Error::TooFewMinority { k: 5, needed: 6, found: 3 })
        ));
        assert!(matches!(
            oversample(&f, &[false; 20], &cfg(OversampleMethod::Smote, 5, 1.0)),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn borderline_prefers_mixed_neighborhoods() {
        // minority: five isolated far points and three tight pairs inside the majority grid
        let mut f = Vec::new();
        let mut l = Vec::new();
        for i in 0..40 {
            f.push(vec![(i % 8) as f64 * 0.1, (i / 8) as f64 * 0.1]);
            l.push(false);
        }
        for i in 0..5 {
            f.push(vec![10.0 + i as f64 * 0.01, 10.0]);
            l.push(true);
        }
        for x in [0.25, 0.45, 0.65] {
            f.push(vec![x, 0.15]);
            f.push(vec![x + 0.01, 0.15]);
            l.extend([true, true]);
        }
        let o = oversample(&f, &l, &cfg(OversampleMethod::BorderlineSmote, 5, 0.5)).unwrap();
        assert!(!o.fell_back_to_all);
        assert!(o.features[f.len()..].iter().all(|p| p[0] < 1.0));
    }
}
