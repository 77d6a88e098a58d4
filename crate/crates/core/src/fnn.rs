//! Three-hidden-layer ReLU network surrogate.
//!
//! Training minimizes mean squared error plus an L2 penalty on the weight
//! matrices with Adam on shuffled mini-batches. Targets are standardized
//! internally; predictions and Jacobians are reported in raw target units.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::kfold_split;
use crate::hybrid::nrmse;
use crate::{check_dim, par_map, stats, Differentiable, Error, Result, Surrogate};

/// Admissible hidden widths: powers of two from 2^5 to 2^10.
pub const WIDTH_CHOICES: [usize; 6] = [32, 64, 128, 256, 512, 1024];

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FnnArchitecture {
    pub input_dim: usize,
    pub hidden: [usize; 3],
}

impl FnnArchitecture {
    /// Pyramidal (non-decreasing) power-of-two widths in `32..=1024`.
    pub fn new(input_dim: usize, hidden: [usize; 3]) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("input_dim must be positive"));
        }
        if hidden.iter().any(|w| !WIDTH_CHOICES.contains(w)) {
            return Err(Error::invalid(format!(
                "hidden widths {hidden:?} must be powers of two in 32..=1024"
            )));
        }
        if hidden.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid(format!(
                "hidden widths {hidden:?} must be non-decreasing"
            )));
        }
        Ok(FnnArchitecture { input_dim, hidden })
    }

    /// Every pyramidal architecture whose widths come from `choices`.
    pub fn pyramidal_grid(input_dim: usize, choices: &[usize]) -> Result<Vec<Self>> {
        let mut c = choices.to_vec();
        c.sort_unstable();
        c.dedup();
        let mut out = Vec::new();
        for (i, &a) in c.iter().enumerate() {
            for (j, &b) in c.iter().enumerate().skip(i) {
                for &w in c.iter().skip(j) {
                    out.push(Self::new(input_dim, [a, b, w])?);
                }
            }
        }
        Ok(out)
    }

    pub fn full_grid(input_dim: usize) -> Result<Vec<Self>> {
        Self::pyramidal_grid(input_dim, &WIDTH_CHOICES)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// L2 coefficient on weight matrices.
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Share of the training rows held out to pick the best epoch.
    pub holdout_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            weight_decay: 1e-4,
            batch_size: 32,
            epochs: 100,
            seed: 0,
            holdout_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::invalid("weight_decay must be nonnegative"));
        }
        if !self.batch_size.is_power_of_two() || !(8..=128).contains(&self.batch_size) {
            return Err(Error::invalid(format!(
                "batch_size {} must be a power of two in [8, 128]",
                self.batch_size
            )));
        }
        if !(50..=500).contains(&self.epochs) {
            return Err(Error::invalid(format!(
                "epochs {} must lie in [50, 500]",
                self.epochs
            )));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction <= 0.5) {
            return Err(Error::invalid("holdout_fraction must lie in (0, 0.5]"));
        }
        Ok(())
    }
}

/// Hyperparameter axes swept by [`grid_search_cv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainGrid {
    pub learning_rates: Vec<f64>,
    pub weight_decays: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub epochs: Vec<usize>,
}

/// `n` values evenly spaced in log10 between `10^lo` and `10^hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![10f64.powf(lo)];
    }
    (0..n)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .collect()
}

pub(crate) fn union_scaled(base: &[f64], factor: f64) -> Vec<f64> {
    let mut v: Vec<f64> = base.iter().copied().chain(base.iter().map(|x| x * factor)).collect();
    v.sort_by(f64::total_cmp);
    v
}

impl TrainGrid {
    /// The complete sweep: learning rate in `s ∪ 3s`, weight decay in
    /// `s ∪ 5s` with `s` ten log-spaced values over `[1e-4, 1e-1]`, batch
    /// sizes `8..=128` in powers of two and fifty epoch counts over `[50, 500]`.
    pub fn full() -> Self {
        let s = log_grid(-4.0, -1.0, 10);
        TrainGrid {
            learning_rates: union_scaled(&s, 3.0),
            weight_decays: union_scaled(&s, 5.0),
            batch_sizes: vec![8, 16, 32, 64, 128],
            epochs: (0..50)
                .map(|i| (50.0 + 450.0 * i as f64 / 49.0).round() as usize)
                .collect(),
        }
    }

    /// Desk-scale default: 3 x 3 learning rate by weight decay, two epoch counts.
    pub fn reduced() -> Self {
        TrainGrid {
            learning_rates: vec![1e-3, 3e-3, 1e-2],
            weight_decays: vec![1e-4, 5e-4, 1e-3],
            batch_sizes: vec![32],
            epochs: vec![50, 100],
        }
    }

    /// Cartesian product in lexicographic axis order.
    pub fn configs(&self, seed: u64, holdout_fraction: f64) -> Vec<TrainConfig> {
        let mut out = Vec::new();
        for &learning_rate in &self.learning_rates {
            for &weight_decay in &self.weight_decays {
                for &batch_size in &self.batch_sizes {
                    for &epochs in &self.epochs {
                        out.push(TrainConfig {
                            learning_rate,
                            weight_decay,
                            batch_size,
                            epochs,
                            seed,
                            holdout_fraction,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Dense affine layer, weights stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn new(inputs: usize, outputs: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::invalid("layer dimensions must be positive"));
        }
        if weights.len() != inputs * outputs || bias.len() != outputs {
            return Err(Error::invalid(format!(
                "layer {inputs}->{outputs} got {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Layer {
            inputs,
            outputs,
            weights,
            bias,
        })
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.bias))
        {
            *o = b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub config: TrainConfig,
    pub train_loss: Vec<f64>,
    pub holdout_loss: Vec<f64>,
    /// Zero-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

/// Feedforward ReLU network: hidden layers use ReLU, the last layer is affine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnModel {
    pub layers: Vec<Layer>,
    /// Raw prediction is `y_shift + y_scale * network(x)`.
    pub y_shift: f64,
    pub y_scale: f64,
    pub architecture: Option<FnnArchitecture>,
    pub training: Option<TrainingRecord>,
}

impl FnnModel {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        for w in layers.windows(2) {
            if w[0].outputs != w[1].inputs {
                return Err(Error::invalid(format!(
                    "layer shapes do not chain: {} outputs feed {} inputs",
                    w[0].outputs, w[1].inputs
                )));
            }
        }
        if layers.last().map(|l| l.outputs) != Some(1) {
            return Err(Error::invalid("network must have a single output"));
        }
        let model = FnnModel {
            layers,
            y_shift: 0.0,
            y_scale: 1.0,
            architecture: None,
            training: None,
        };
        if !model.is_finite() {
            return Err(Error::invalid("parameters must be finite"));
        }
        Ok(model)
    }

    /// He-initialized network with arbitrary layer widths (`widths` excludes
    /// the input and the single output).
    pub fn random(input_dim: usize, widths: &[usize], seed: u64) -> Result<Self> {
        let mut rng = stats::rng(seed);
        let mut dims = vec![input_dim];
        dims.extend_from_slice(widths);
        dims.push(1);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let scale = (2.0 / fan_in as f64).sqrt();
                let weights = (0..fan_in * fan_out)
                    .map(|_| scale * stats::standard_normal(&mut rng))
                    .collect();
                Layer::new(fan_in, fan_out, weights, vec![0.0; fan_out])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn is_finite(&self) -> bool {
        self.y_shift.is_finite()
            && self.y_scale.is_finite()
            && self
                .layers
                .iter()
                .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_norm_sq(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| &l.weights)
            .map(|w| w * w)
            .sum()
    }

    fn trace(&self) -> Trace {
        Trace {
            pre: self.layers.iter().map(|l| vec![0.0; l.outputs]).collect(),
            act: self.layers.iter().map(|l| vec![0.0; l.outputs]).collect(),
        }
    }

    /// Forward pass recording pre-activations; returns the standardized output.
    fn forward_traced(&self, x: &[f64], t: &mut Trace) -> f64 {
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let (done, rest) = t.act.split_at_mut(i);
            let input: &[f64] = if i == 0 { x } else { &done[i - 1] };
            layer.forward(input, &mut t.pre[i]);
            let act = &mut rest[0];
            if i == last {
                act.copy_from_slice(&t.pre[i]);
            } else {
                for (a, p) in act.iter_mut().zip(&t.pre[i]) {
                    *a = p.max(0.0);
                }
            }
        }
        t.act[last][0]
    }

    /// Back-propagate `seed` (d loss / d output) to the input. ReLU
    /// derivative is taken as 0 at a pre-activation of exactly 0.
    fn input_gradient(&self, t: &Trace, out: &mut [f64]) {
        let mut g = vec![1.0];
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if i != self.layers.len() - 1 {
                for (gv, p) in g.iter_mut().zip(&t.pre[i]) {
                    if *p <= 0.0 {
                        *gv = 0.0;
                    }
                }
            }
            let mut next = vec![0.0; layer.inputs];
            for (row, gv) in layer.weights.chunks_exact(layer.inputs).zip(&g) {
                if *gv == 0.0 {
                    continue;
                }
                for (n, w) in next.iter_mut().zip(row) {
                    *n += gv * w;
                }
            }
            g = next;
        }
        for (o, v) in out.iter_mut().zip(g) {
            *o = v * self.y_scale;
        }
    }

    /// Minimum absolute hidden pre-activation at `x`; small values mean `x`
    /// sits near a ReLU kink.
    pub fn kink_margin(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.input_dim(), x.len())?;
        let mut t = self.trace();
        self.forward_traced(x, &mut t);
        let hidden = self.layers.len() - 1;
        Ok(t.pre[..hidden]
            .iter()
            .flatten()
            .map(|p| p.abs())
            .fold(f64::INFINITY, f64::min))
    }

    /// Hidden-unit on/off pattern at `x`.
    pub fn activation_pattern(&self, x: &[f64]) -> Result<Vec<bool>> {
        check_dim(self.input_dim(), x.len())?;
        let mut t = self.trace();
        self.forward_traced(x, &mut t);
        let hidden = self.layers.len() - 1;
        Ok(t.pre[..hidden].iter().flatten().map(|p| *p > 0.0).collect())
    }
}

struct Trace {
    pre: Vec<Vec<f64>>,
    act: Vec<Vec<f64>>,
}

impl Surrogate for FnnModel {
    fn input_dim(&self) -> usize {
        FnnModel::input_dim(self)
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.input_dim(), x.len())?;
        let mut t = self.trace();
        Ok(self.y_shift + self.y_scale * self.forward_traced(x, &mut t))
    }
}

impl Differentiable for FnnModel {
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.input_dim(), x.len())?;
        check_dim(self.input_dim(), out.len())?;
        let mut t = self.trace();
        self.forward_traced(x, &mut t);
        self.input_gradient(&t, out);
        Ok(())
    }
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: i32,
}

impl Adam {
    fn new(model: &FnnModel) -> Self {
        let shapes: Vec<usize> = model
            .layers
            .iter()
            .flat_map(|l| [l.weights.len(), l.bias.len()])
            .collect();
        Adam {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    fn update(&mut self, model: &mut FnnModel, grads: &[Vec<f64>], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.step);
        let c2 = 1.0 - ADAM_BETA2.powi(self.step);
        let params = model
            .layers
            .iter_mut()
            .flat_map(|l| [&mut l.weights, &mut l.bias]);
        for (((p, g), m), v) in params.zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
            }
        }
    }
}

/// Train on `inputs`/`targets` (inputs already standardized).
///
/// A seeded `holdout_fraction` of the rows is kept aside; the returned model
/// holds the parameters from the epoch with the lowest holdout MSE.
pub fn train(
    inputs: &[Vec<f64>],
    targets: &[f64],
    arch: &FnnArchitecture,
    config: &TrainConfig,
) -> Result<FnnModel> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if inputs.len() != targets.len() {
        return Err(Error::invalid("inputs and targets differ in length"));
    }
    for x in inputs {
        check_dim(arch.input_dim, x.len())?;
    }
    let mut rng = stats::rng(config.seed);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    order.shuffle(&mut rng);
    let n_hold = if inputs.len() >= 2 {
        ((inputs.len() as f64 * config.holdout_fraction).round() as usize).clamp(1, inputs.len() - 1)
    } else {
        0
    };
    let (hold_idx, fit_idx) = order.split_at(n_hold);
    let mut fit_idx = fit_idx.to_vec();
    let hold_idx = if hold_idx.is_empty() {
        fit_idx.clone()
    } else {
        hold_idx.to_vec()
    };

    let fit_targets: Vec<f64> = fit_idx.iter().map(|&i| targets[i]).collect();
    let y_shift = stats::mean(&fit_targets);
    let y_scale = match stats::population_std(&fit_targets) {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let z = |i: usize| (targets[i] - y_shift) / y_scale;

    let mut model = FnnModel::random(arch.input_dim, &arch.hidden, rng.gen())?;
    model.y_shift = y_shift;
    model.y_scale = y_scale;
    model.architecture = Some(*arch);

    let mut adam = Adam::new(&model);
    let mut grads: Vec<Vec<f64>> = model
        .layers
        .iter()
        .flat_map(|l| [vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]])
        .collect();
    let mut trace = model.trace();
    let mut delta: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.outputs]).collect();

    let mut best = model.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut train_trace = Vec::with_capacity(config.epochs);
    let mut hold_trace = Vec::with_capacity(config.epochs);
    let lambda = config.weight_decay;

    for epoch in 0..config.epochs {
        fit_idx.shuffle(&mut rng);
        let mut epoch_sse = 0.0;
        for batch in fit_idx.chunks(config.batch_size) {
            for g in grads.iter_mut() {
                g.fill(0.0);
            }
            let scale = 2.0 / batch.len() as f64;
            for &i in batch {
                let out = model.forward_traced(&inputs[i], &mut trace);
                let err = out - z(i);
                epoch_sse += err * err;
                backprop(&model, &inputs[i], &trace, err * scale, &mut delta, &mut grads);
            }
            for (li, layer) in model.layers.iter().enumerate() {
                for (g, w) in grads[2 * li].iter_mut().zip(&layer.weights) {
                    *g += 2.0 * lambda * w;
                }
            }
            adam.update(&mut model, &grads, config.learning_rate);
        }
        let train_mse = epoch_sse / fit_idx.len() as f64;
        let hold_mse = hold_idx
            .iter()
            .map(|&i| {
                let e = model.forward_traced(&inputs[i], &mut trace) - z(i);
                e * e
            })
            .sum::<f64>()
            / hold_idx.len() as f64;
        if !train_mse.is_finite() || !hold_mse.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: train_mse,
            });
        }
        train_trace.push(train_mse);
        hold_trace.push(hold_mse);
        if hold_mse < best_loss {
            best_loss = hold_mse;
            best_epoch = epoch;
            best.layers.clone_from(&model.layers);
        }
    }
    best.training = Some(TrainingRecord {
        config: *config,
        train_loss: train_trace,
        holdout_loss: hold_trace,
        best_epoch,
    });
    Ok(best)
}

/// Accumulate parameter gradients for one sample given `d loss / d output`.
fn backprop(
    model: &FnnModel,
    x: &[f64],
    t: &Trace,
    d_out: f64,
    delta: &mut [Vec<f64>],
    grads: &mut [Vec<f64>],
) {
    let last = model.layers.len() - 1;
    delta[last][0] = d_out;
    for li in (0..=last).rev() {
        let layer = &model.layers[li];
        if li != last {
            for (d, p) in delta[li].iter_mut().zip(&t.pre[li]) {
                if *p <= 0.0 {
                    *d = 0.0;
                }
            }
        }
        let input: &[f64] = if li == 0 { x } else { &t.act[li - 1] };
        let (below, here) = delta.split_at_mut(li);
        let d_here = &here[0];
        {
            let (gw, gb) = {
                let (a, b) = grads.split_at_mut(2 * li + 1);
                (&mut a[2 * li], &mut b[0])
            };
            for (o, &d) in d_here.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                for (g, v) in row.iter_mut().zip(input) {
                    *g += d * v;
                }
            }
        }
        if li > 0 {
            let d_below = &mut below[li - 1];
            d_below.fill(0.0);
            for (o, &d) in d_here.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (db, w) in d_below.iter_mut().zip(row) {
                    *db += d * w;
                }
            }
        }
    }
}

/// One `(architecture, config)` combination of a grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub arch: FnnArchitecture,
    pub config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub cell: usize,
    pub fold: usize,
    pub hidden: [usize; 3],
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub nrmse: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: GridCell,
    pub best_score: f64,
    /// Mean validation NRMSE per cell; `None` when a fold failed.
    pub cell_scores: Vec<Option<f64>>,
    /// One row per (cell, fold), cell-major.
    pub table: Vec<CvRow>,
}

/// k-fold grid search minimizing mean validation NRMSE. Cells are ordered
/// architecture-major; ties go to the earlier cell. A failing fold marks its
/// cell failed without aborting the sweep.
pub fn grid_search_cv(
    inputs: &[Vec<f64>],
    targets: &[f64],
    archs: &[FnnArchitecture],
    configs: &[TrainConfig],
    k: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    if archs.is_empty() || configs.is_empty() {
        return Err(Error::invalid("grid search needs nonempty grids"));
    }
    let folds = kfold_split(inputs.len(), k, seed)?;
    let y_min = targets.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cells: Vec<GridCell> = archs
        .iter()
        .flat_map(|a| configs.iter().map(move |c| GridCell { arch: *a, config: *c }))
        .collect();
    let jobs = cells.len() * folds.len();
    let results: Vec<Result<f64>> = par_map(jobs, |job| {
        let (ci, fi) = (job / folds.len(), job % folds.len());
        let cell = &cells[ci];
        let fold = &folds[fi];
        let xs: Vec<Vec<f64>> = fold.train.iter().map(|&i| inputs[i].clone()).collect();
        let ys: Vec<f64> = fold.train.iter().map(|&i| targets[i]).collect();
        let config = TrainConfig {
            seed: stats::derive_seed(cell.config.seed, fi as u64),
            ..cell.config
        };
        let model = train(&xs, &ys, &cell.arch, &config)?;
        let preds = fold
            .validation
            .iter()
            .map(|&i| model.predict(&inputs[i]))
            .collect::<Result<Vec<_>>>()?;
        let truth: Vec<f64> = fold.validation.iter().map(|&i| targets[i]).collect();
        nrmse(&preds, &truth, y_min, y_max)
    });

    let mut table = Vec::with_capacity(jobs);
    let mut cell_scores = Vec::with_capacity(cells.len());
    for (ci, cell) in cells.iter().enumerate() {
        let mut sum = 0.0;
        let mut ok = true;
        for fi in 0..folds.len() {
            let r = &results[ci * folds.len() + fi];
            let (nrmse, error) = match r {
                Ok(v) => {
                    sum += v;
                    (Some(*v), None)
                }
                Err(e) => {
                    ok = false;
                    (None, Some(e.to_string()))
                }
            };
            table.push(CvRow {
                cell: ci,
                fold: fi,
                hidden: cell.arch.hidden,
                learning_rate: cell.config.learning_rate,
                weight_decay: cell.config.weight_decay,
                batch_size: cell.config.batch_size,
                epochs: cell.config.epochs,
                nrmse,
                error,
            });
        }
        cell_scores.push(ok.then(|| sum / folds.len() as f64));
    }
    let (best_idx, best_score) = cell_scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| (i, s)))
        .fold(None, |acc: Option<(usize, f64)>, (i, s)| match acc {
            Some((_, b)) if b <= s => acc,
            _ => Some((i, s)),
        })
        .ok_or(Error::AllCellsFailed)?;
    Ok(GridSearchResult {
        best: cells[best_idx],
        best_score,
        cell_scores,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linear_1d(n: usize, lo: f64, hi: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1) as f64])
            .collect();
        let ys = xs.iter().map(|x| 3.0 * x[0] + 1.0).collect();
        (xs, ys)
    }

    fn hand_model() -> FnnModel {
        // 2 -> 1 hidden unit -> 1
        let l1 = Layer::new(2, 1, vec![2.0, -1.0], vec![0.5]).unwrap();
        let l2 = Layer::new(1, 1, vec![3.0], vec![-1.0]).unwrap();
        FnnModel::from_layers(vec![l1, l2]).unwrap()
    }

    #[test]
    fn architecture_contract() {
        assert!(FnnArchitecture::new(15, [32, 64, 128]).is_ok());
        assert!(FnnArchitecture::new(15, [64, 32, 128]).is_err());
        assert!(FnnArchitecture::new(15, [48, 64, 128]).is_err());
        assert!(FnnArchitecture::new(15, [16, 32, 64]).is_err());
        assert!(FnnArchitecture::new(0, [32, 32, 32]).is_err());
        // C(6 + 2, 3) non-decreasing triples
        assert_eq!(FnnArchitecture::full_grid(3).unwrap().len(), 56);
    }

    #[test]
    fn config_contract() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        assert!(TrainConfig { epochs: 0, ..ok }.validate().is_err());
        assert!(TrainConfig { epochs: 49, ..ok }.validate().is_err());
        assert!(TrainConfig { batch_size: 24, ..ok }.validate().is_err());
        assert!(TrainConfig { batch_size: 256, ..ok }.validate().is_err());
        assert!(TrainConfig { learning_rate: 0.0, ..ok }.validate().is_err());
    }

    #[test]
    fn full_grid_axes() {
        let g = TrainGrid::full();
        assert_eq!(g.learning_rates.len(), 20);
        assert_eq!(g.weight_decays.len(), 20);
        assert!((g.learning_rates[0] - 1e-4).abs() < 1e-18);
        assert!((g.learning_rates[19] - 0.3).abs() < 1e-12);
        assert!((g.weight_decays[19] - 0.5).abs() < 1e-12);
        assert_eq!(g.epochs.first(), Some(&50));
        assert_eq!(g.epochs.last(), Some(&500));
        assert_eq!(g.epochs.len(), 50);
    }

    #[test]
    fn zero_weights_predict_output_bias() {
        let l1 = Layer::new(3, 4, vec![0.0; 12], vec![0.0; 4]).unwrap();
        let l2 = Layer::new(4, 1, vec![0.0; 4], vec![2.5]).unwrap();
        let m = FnnModel::from_layers(vec![l1, l2]).unwrap();
        for x in [[0.0, 0.0, 0.0], [1.0, -7.0, 3.0]] {
            assert_eq!(m.predict(&x).unwrap(), 2.5);
        }
    }

    #[test]
    fn hand_computed_forward() {
        let m = hand_model();
        // hidden = relu(2*1 - 1*0.5 + 0.5) = 2 ; out = 3*2 - 1 = 5
        assert_eq!(m.predict(&[1.0, 0.5]).unwrap(), 5.0);
        // hidden = relu(-0.5 - 2 + 0.5) = 0 ; out = -1
        assert_eq!(m.predict(&[-0.25, 2.0]).unwrap(), -1.0);
        assert!(matches!(m.predict(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn hand_computed_jacobian() {
        let m = hand_model();
        assert_eq!(m.gradient(&[1.0, 0.5]).unwrap(), vec![6.0, -3.0]);
        // dead unit
        assert_eq!(m.gradient(&[-0.25, 2.0]).unwrap(), vec![0.0, 0.0]);
        // exactly at the kink the derivative is 0
        assert_eq!(m.gradient(&[0.0, 0.5]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn linear_network_jacobian_is_weights() {
        let l = Layer::new(3, 1, vec![0.5, -2.0, 4.0], vec![1.0]).unwrap();
        let m = FnnModel::from_layers(vec![l]).unwrap();
        assert_eq!(m.gradient(&[9.0, 1.0, -3.0]).unwrap(), vec![0.5, -2.0, 4.0]);
    }

    #[test]
    fn dead_relu_region_has_zero_jacobian() {
        // all first-layer pre-activations are -sum(x) - 1 < 0 for x >= 0
        let l1 = Layer::new(2, 3, vec![-1.0; 6], vec![-1.0; 3]).unwrap();
        let l2 = Layer::new(3, 1, vec![1.0, 2.0, 3.0], vec![0.0]).unwrap();
        let m = FnnModel::from_layers(vec![l1, l2]).unwrap();
        assert_eq!(m.gradient(&[0.3, 2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        let l1 = Layer::new(2, 3, vec![0.0; 6], vec![0.0; 3]).unwrap();
        let l2 = Layer::new(2, 1, vec![0.0; 2], vec![0.0]).unwrap();
        assert!(FnnModel::from_layers(vec![l1, l2]).is_err());
        assert!(Layer::new(2, 3, vec![0.0; 5], vec![0.0; 3]).is_err());
    }

    #[test]
    fn fits_a_line() {
        let (xs, ys) = linear_1d(200, -1.7, 1.7);
        let arch = FnnArchitecture::new(1, [32, 32, 32]).unwrap();
        let cfg = TrainConfig {
            learning_rate: 3e-3,
            epochs: 150,
            seed: 4,
            ..TrainConfig::default()
        };
        let m = train(&xs, &ys, &arch, &cfg).unwrap();
        let (tx, ty) = linear_1d(57, -1.6, 1.6);
        let preds: Vec<f64> = tx.iter().map(|x| m.predict(x).unwrap()).collect();
        let e = nrmse(&preds, &ty, 3.0 * -1.6 + 1.0, 3.0 * 1.6 + 1.0).unwrap();
        assert!(e < 0.02, "nrmse {e}");
        let rec = m.training.as_ref().unwrap();
        assert_eq!(rec.train_loss.len(), 150);
        let best = rec.holdout_loss[rec.best_epoch];
        assert!(rec.holdout_loss.iter().all(|l| *l >= best));
    }

    #[test]
    fn seeded_training_is_bitwise_reproducible() {
        let (xs, ys) = linear_1d(64, 0.0, 1.0);
        let arch = FnnArchitecture::new(1, [32, 32, 64]).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            seed: 99,
            ..TrainConfig::default()
        };
        let a = train(&xs, &ys, &arch, &cfg).unwrap();
        let b = train(&xs, &ys, &arch, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stronger_weight_decay_shrinks_parameters() {
        let xs: Vec<Vec<f64>> = (0..96)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()])
            .collect();
        let ys: Vec<f64> = xs.iter().map(|x| x[0] * x[1] + x[0]).collect();
        let arch = FnnArchitecture::new(2, [32, 32, 32]).unwrap();
        let base = TrainConfig {
            epochs: 60,
            seed: 3,
            learning_rate: 3e-3,
            ..TrainConfig::default()
        };
        let weak = train(&xs, &ys, &arch, &TrainConfig { weight_decay: 1e-4, ..base }).unwrap();
        let strong = train(&xs, &ys, &arch, &TrainConfig { weight_decay: 1e-1, ..base }).unwrap();
        assert!(strong.weight_norm_sq() < weak.weight_norm_sq());
    }

    #[test]
    fn divergence_names_epoch() {
        let (xs, ys) = linear_1d(32, 0.0, 1.0);
        let arch = FnnArchitecture::new(1, [32, 32, 32]).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e200,
            epochs: 50,
            ..TrainConfig::default()
        };
        match train(&xs, &ys, &arch, &cfg) {
            Err(Error::Diverged { epoch, .. }) => assert!(epoch < 50),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn grid_of_one_returns_it() {
        let (xs, ys) = linear_1d(60, 0.0, 1.0);
        let arch = FnnArchitecture::new(1, [32, 32, 32]).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            ..TrainConfig::default()
        };
        let r = grid_search_cv(&xs, &ys, &[arch], &[cfg], 3, 0).unwrap();
        assert_eq!(r.best, GridCell { arch, config: cfg });
        assert_eq!(r.table.len(), 3);
        assert_eq!(r.cell_scores, vec![Some(r.best_score)]);
    }

    #[test]
    fn better_cell_wins_and_table_is_complete() {
        let xs: Vec<Vec<f64>> = (0..120).map(|i| vec![-1.5 + 3.0 * i as f64 / 119.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x[0] * x[0]).collect();
        let arch = FnnArchitecture::new(1, [32, 32, 32]).unwrap();
        // tiny step for 50 epochs cannot bend a quadratic; the other cell can
        let starved = TrainConfig {
            learning_rate: 1e-5,
            epochs: 50,
            ..TrainConfig::default()
        };
        let fitted = TrainConfig {
            learning_rate: 1e-2,
            epochs: 150,
            batch_size: 16,
            ..TrainConfig::default()
        };
        let bad = TrainConfig {
            epochs: 10,
            ..TrainConfig::default()
        };
        let r = grid_search_cv(&xs, &ys, &[arch], &[starved, fitted, bad], 3, 5).unwrap();
        assert_eq!(r.best.config, fitted);
        assert_eq!(r.table.len(), 3 * 3);
        assert!(r.cell_scores[2].is_none());
        assert!(r.table[6].error.is_some());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn piecewise_linear_along_segments(seed in 0u64..1000, a in prop::collection::vec(-2.0f64..2.0, 3), b in prop::collection::vec(-2.0f64..2.0, 3)) {
            let m = FnnModel::random(3, &[8, 8], seed).unwrap();
            let at = |t: f64| -> Vec<f64> { a.iter().zip(&b).map(|(p, q)| t * p + (1.0 - t) * q).collect() };
            // sample alphas; any three sharing a pattern must be collinear
            let alphas: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
            let pats: Vec<Vec<bool>> = alphas.iter().map(|&t| m.activation_pattern(&at(t)).unwrap()).collect();
            let vals: Vec<f64> = alphas.iter().map(|&t| m.predict(&at(t)).unwrap()).collect();
            for i in 0..alphas.len() - 2 {
                if pats[i] == pats[i + 1] && pats[i + 1] == pats[i + 2] {
                    let s1 = (vals[i + 1] - vals[i]) / (alphas[i + 1] - alphas[i]);
                    let s2 = (vals[i + 2] - vals[i + 1]) / (alphas[i + 2] - alphas[i + 1]);
                    prop_assert!((s1 - s2).abs() <= 1e-9 * (1.0 + s1.abs()), "{} vs {}", s1, s2);
                }
            }
        }
    }
}
