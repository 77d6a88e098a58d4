//! L2-regularized logistic regression on standardized features, kept as a
//! reference classifier next to the boosted trees.

use serde::{Deserialize, Serialize};

use crate::{check_dim, stats, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), x.len())?;
        let z: f64 = self.bias
            + x.iter()
                .zip(&self.weights)
                .zip(self.mean.iter().zip(&self.std))
                .map(|((v, w), (m, s))| w * (v - m) / s)
                .sum::<f64>();
        Ok(1.0 / (1.0 + (-z).exp()))
    }
}

/// Full-batch Newton iterations on the penalized log-loss.
pub fn logistic_train(features: &[Vec<f64>], labels: &[bool], l2: f64) -> Result<LogisticModel> {
    if features.len() != labels.len() || features.is_empty() {
        return Err(Error::invalid("features and labels must be nonempty and aligned"));
    }
    let pos = labels.iter().filter(|l| **l).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::SingleClass);
    }
    let d = features[0].len();
    let n = features.len();
    let mut mean = Vec::with_capacity(d);
    let mut std = Vec::with_capacity(d);
    for j in 0..d {
        let col: Vec<f64> = features.iter().map(|f| f[j]).collect();
        let s = stats::population_std(&col);
        mean.push(stats::mean(&col));
        std.push(if s > 0.0 { s } else { 1.0 });
    }
    let z: Vec<Vec<f64>> = features
        .iter()
        .map(|f| {
            check_dim(d, f.len())?;
            let mut row: Vec<f64> = f.iter().zip(mean.iter().zip(&std)).map(|(v, (m, s))| (v - m) / s).collect();
            row.push(1.0);
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let p_dim = d + 1;
    let mut beta = vec![0.0; p_dim];
    for _ in 0..50 {
        let mut grad = vec![0.0; p_dim];
        let mut hess = vec![0.0; p_dim * p_dim];
        for (row, &y) in z.iter().zip(labels) {
            let eta: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-eta).exp());
            let w = (p * (1.0 - p)).max(1e-10);
            let r = p - if y { 1.0 } else { 0.0 };
            for a in 0..p_dim {
                grad[a] += r * row[a] / n as f64;
                for b in 0..p_dim {
                    hess[a * p_dim + b] += w * row[a] * row[b] / n as f64;
                }
            }
        }
        for a in 0..d {
            grad[a] += l2 * beta[a];
            hess[a * p_dim + a] += l2;
        }
        hess[d * p_dim + d] += 1e-10;
        let chol = crate::linalg::Cholesky::factor_with_jitter(&hess, p_dim)?;
        let step = chol.solve(&grad);
        let mut moved = 0.0f64;
        for (b, s) in beta.iter_mut().zip(&step) {
            *b -= s;
            moved = moved.max(s.abs());
        }
        if moved < 1e-10 {
            break;
        }
    }
    Ok(LogisticModel {
        mean,
        std,
        bias: beta[d],
        weights: beta[..d].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn recovers_known_slope() {
        let mut rng = stats::rng(6);
        let xs: Vec<Vec<f64>> = (0..4000).map(|_| vec![rng.gen_range(-3.0..3.0)]).collect();
        let ys: Vec<bool> = xs
            .iter()
            .map(|x| rng.gen::<f64>() < 1.0 / (1.0 + (-(2.0 * x[0] - 0.5)).exp()))
            .collect();
        let m = logistic_train(&xs, &ys, 0.0).unwrap();
        let slope = m.weights[0] / m.std[0];
        assert!((slope - 2.0).abs() < 0.25, "slope {slope}");
        let p0 = m.predict_proba(&[0.25]).unwrap();
        assert!((p0 - 0.5).abs() < 0.05);
    }
}
