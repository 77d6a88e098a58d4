//! Gradient-boosted regression trees on the binary logistic loss.
//!
//! Each stage fits a depth-limited tree to the residuals `y - p` with exact
//! greedy squared-error splits; leaves take the Newton step
//! `sum(y - p) / sum(p (1 - p))`, shrunk by the learning rate.

use serde::{Deserialize, Serialize};

use crate::fnn::{log_grid, union_scaled};
use crate::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtConfig {
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            learning_rate: 0.1,
            n_estimators: 100,
            max_depth: 3,
            min_samples_leaf: 5,
            seed: 0,
        }
    }
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("GBDT learning rate must be positive"));
        }
        if self.n_estimators == 0 || self.max_depth == 0 || self.min_samples_leaf == 0 {
            return Err(Error::invalid("GBDT estimators, depth and leaf size must be positive"));
        }
        Ok(())
    }

    pub fn grid(learning_rates: &[f64], n_estimators: &[usize], seed: u64) -> Vec<Self> {
        learning_rates
            .iter()
            .flat_map(|&learning_rate| {
                n_estimators.iter().map(move |&n_estimators| GbdtConfig {
                    learning_rate,
                    n_estimators,
                    seed,
                    ..Default::default()
                })
            })
            .collect()
    }

    /// Learning rate in `s ∪ 5s`, `s` ten log-spaced values over
    /// `[1e-3, 1e-1]`, and 100, 250 or 500 estimators.
    pub fn full_grid(seed: u64) -> Vec<Self> {
        Self::grid(&union_scaled(&log_grid(-3.0, -1.0, 10), 5.0), &[100, 250, 500], seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn split_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    residual: &'a [f64],
    hessian: &'a [f64],
    config: &'a GbdtConfig,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn leaf(&self, idx: &[usize]) -> Node {
        let r: f64 = idx.iter().map(|&i| self.residual[i]).sum();
        let h: f64 = idx.iter().map(|&i| self.hessian[i]).sum();
        let value = if h > 1e-12 { r / h } else { 0.0 };
        Node::Leaf { value }
    }

    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64)> {
        let n = idx.len();
        let min_leaf = self.config.min_samples_leaf;
        if n < 2 * min_leaf {
            return None;
        }
        let total: f64 = idx.iter().map(|&i| self.residual[i]).sum();
        let parent = total * total / n as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        for f in 0..self.x[idx[0]].len() {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left = 0.0;
            for k in 0..n - 1 {
                left += self.residual[order[k]];
                let (lo, hi) = (self.x[order[k]][f], self.x[order[k + 1]][f]);
                let n_left = k + 1;
                if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let right = total - left;
                let gain = left * left / n_left as f64 + right * right / (n - n_left) as f64 - parent;
                if gain > 1e-12 && best.map_or(true, |b| gain > b.0) {
                    best = Some((gain, f, lo + (hi - lo) / 2.0));
                }
            }
        }
        best.map(|b| (b.1, b.2))
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });
        let split = if depth < self.config.max_depth { self.best_split(idx) } else { None };
        match split {
            None => self.nodes[at] = self.leaf(idx),
            Some((feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
                let left = self.grow(&l, depth + 1);
                let right = self.grow(&r, depth + 1);
                self.nodes[at] = Node::Split { feature, threshold, left, right };
            }
        }
        at
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn log_loss(margins: &[f64], labels: &[bool]) -> f64 {
    // log(1 + exp(-s z)) with s = +-1, computed stably
    let total: f64 = margins
        .iter()
        .zip(labels)
        .map(|(&z, &y)| {
            let m = if y { -z } else { z };
            m.max(0.0) + (-m.abs()).exp().ln_1p()
        })
        .sum();
    total / margins.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Feature names in column order.
    pub features: Vec<String>,
    /// Log-odds of the positive rate in the training set.
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    pub config: GbdtConfig,
    /// Mean training log-loss after 0, 1, ..., n_estimators stages.
    pub train_loss: Vec<f64>,
}

impl DetectorModel {
    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.features.len(), x.len())?;
        Ok(self.base_score + self.learning_rate * self.trees.iter().map(|t| t.eval(x)).sum::<f64>())
    }

    /// Probability of the positive (OOD) class.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.margin(x)?))
    }

    pub fn predict_proba_all(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.predict_proba(x)).collect()
    }
}

pub fn gbdt_train(features: &[Vec<f64>], labels: &[bool], names: &[&str], config: &GbdtConfig) -> Result<DetectorModel> {
    config.validate()?;
    if features.len() != labels.len() {
        return Err(Error::invalid("features and labels differ in length"));
    }
    let pos = labels.iter().filter(|l| **l).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::SingleClass);
    }
    let d = names.len();
    for f in features {
        check_dim(d, f.len())?;
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite detector feature"));
        }
    }
    let n = features.len();
    let rate = pos as f64 / n as f64;
    let base_score = (rate / (1.0 - rate)).ln();
    let mut margins = vec![base_score; n];
    let mut residual = vec![0.0; n];
    let mut hessian = vec![0.0; n];
    let mut trees = Vec::with_capacity(config.n_estimators);
    let mut train_loss = vec![log_loss(&margins, labels)];
    let all: Vec<usize> = (0..n).collect();
    for _ in 0..config.n_estimators {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            residual[i] = if labels[i] { 1.0 - p } else { -p };
            hessian[i] = p * (1.0 - p);
        }
        let mut grower = Grower {
            x: features,
            residual: &residual,
            hessian: &hessian,
            config,
            nodes: Vec::new(),
        };
        grower.grow(&all, 0);
        let tree = Tree { nodes: grower.nodes };
        for (m, x) in margins.iter_mut().zip(features) {
            *m += config.learning_rate * tree.eval(x);
        }
        train_loss.push(log_loss(&margins, labels));
        trees.push(tree);
    }
    Ok(DetectorModel {
        features: names.iter().map(|s| s.to_string()).collect(),
        base_score,
        learning_rate: config.learning_rate,
        trees,
        config: *config,
        train_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::metrics::pr_curve;
    use crate::stats;
    use rand::Rng;

    #[test]
    fn separable_one_feature() {
        let mut rng = stats::rng(4);
        let xs: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.gen_range(0.0..2.0)]).collect();
        let ys: Vec<bool> = xs.iter().map(|x| x[0] > 1.0).collect();
        let m = gbdt_train(&xs, &ys, &["JA"], &GbdtConfig::default()).unwrap();
        let scores = m.predict_proba_all(&xs).unwrap();
        assert_eq!(pr_curve(&scores, &ys).unwrap().aupr, 1.0);
        for (s, y) in scores.iter().zip(&ys) {
            assert_eq!(*s >= 0.5, *y);
        }
    }

    #[test]
    fn constant_features_give_base_rate() {
        let xs = vec![vec![1.0, 2.0, 3.0, 4.0]; 50];
        let ys: Vec<bool> = (0..50).map(|i| i % 5 == 0).collect();
        let m = gbdt_train(&xs, &ys, &["SA", "SV", "JA", "JV"], &GbdtConfig::default()).unwrap();
        for p in m.predict_proba_all(&xs).unwrap() {
            assert!((p - 0.2).abs() < 1e-6);
        }
        assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn loss_trace_nonincreasing() {
        let mut rng = stats::rng(9);
        let xs: Vec<Vec<f64>> = (0..300).map(|_| (0..4).map(|_| rng.gen::<f64>()).collect()).collect();
        let ys: Vec<bool> = xs
            .iter()
            .map(|x| x[0] + 0.5 * x[2] + 0.3 * rng.gen::<f64>() > 1.1)
            .collect();
        let m = gbdt_train(&xs, &ys, &["SA", "SV", "JA", "JV"], &GbdtConfig { n_estimators: 60, ..Default::default() }).unwrap();
        assert_eq!(m.train_loss.len(), 61);
        for w in m.train_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn monotone_in_single_split_feature() {
        let mut rng = stats::rng(12);
        let xs: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.gen::<f64>(), 0.0]).collect();
        let ys: Vec<bool> = xs.iter().map(|x| x[0] > 0.3 + 0.4 * rng.gen::<f64>()).collect();
        let m = gbdt_train(&xs, &ys, &["a", "b"], &GbdtConfig::default()).unwrap();
        assert!(m.trees.iter().all(|t| t.split_features().all(|f| f == 0)));
        // every stage is a step function of x[0]; whether the sum is monotone
        // is read off the tree thresholds directly
        let mut cuts: Vec<f64> = m
            .trees
            .iter()
            .flat_map(|t| t.nodes.iter())
            .filter_map(|n| match n {
                Node::Split { threshold, .. } => Some(*threshold),
                Node::Leaf { .. } => None,
            })
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut probes = vec![-1.0];
        probes.extend(cuts.windows(2).map(|w| (w[0] + w[1]) / 2.0));
        probes.push(2.0);
        let scores: Vec<f64> = probes.iter().map(|&v| m.predict_proba(&[v, 0.0]).unwrap()).collect();
        assert!(scores.first().unwrap() < scores.last().unwrap());
        assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)));
    }

    #[test]
    fn single_class_and_round_trip() {
        let xs = vec![vec![0.0], vec![1.0]];
        assert!(matches!(gbdt_train(&xs, &[true, true], &["x"], &GbdtConfig::default()), Err(Error::SingleClass)));
        let mut rng = stats::rng(2);
        let xs: Vec<Vec<f64>> = (0..80).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let ys: Vec<bool> = xs.iter().map(|x| x[0] * x[1] > 0.3).collect();
        let m = gbdt_train(&xs, &ys, &["a", "b"], &GbdtConfig { n_estimators: 20, ..Default::default() }).unwrap();
        let back: DetectorModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        for x in &xs {
            assert_eq!(m.predict_proba(x).unwrap().to_bits(), back.predict_proba(x).unwrap().to_bits());
        }
    }

    #[test]
    fn full_grid_shape() {
        let g = GbdtConfig::full_grid(0);
        assert_eq!(g.len(), 60);
        assert!((g[0].learning_rate - 1e-3).abs() < 1e-15);
    }
}
