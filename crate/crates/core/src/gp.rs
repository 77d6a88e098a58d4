//! Exact Gaussian-process regression with an isotropic RBF kernel.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Cholesky;
use crate::{check_dim, par_map, stats, Error, Result, Surrogate};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// `k(x, x') = signal_variance * exp(-|x - x'|^2 / (2 lengthscale^2))`, plus
/// `noise_variance` on the diagonal of training covariances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbfKernel {
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl RbfKernel {
    pub fn new(lengthscale: f64, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        let k = RbfKernel {
            lengthscale,
            signal_variance,
            noise_variance,
        };
        k.validate()?;
        Ok(k)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lengthscale > 0.0 && self.lengthscale.is_finite())
            || !(self.signal_variance > 0.0 && self.signal_variance.is_finite())
            || !(self.noise_variance >= 0.0 && self.noise_variance.is_finite())
        {
            return Err(Error::invalid(format!("invalid RBF hyperparameters {self:?}")));
        }
        Ok(())
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        self.signal_variance * (-0.5 * sq_dist(a, b) / (self.lengthscale * self.lengthscale)).exp()
    }

    /// `[ln lengthscale, ln signal_variance, ln noise_variance]`.
    pub fn log_params(&self) -> [f64; 3] {
        [
            self.lengthscale.ln(),
            self.signal_variance.ln(),
            self.noise_variance.ln(),
        ]
    }

    pub fn from_log_params(p: [f64; 3]) -> Self {
        RbfKernel {
            lengthscale: p[0].exp(),
            signal_variance: p[1].exp(),
            noise_variance: p[2].exp(),
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Training covariance `K + noise I` (row-major).
fn covariance(kernel: &RbfKernel, xs: &[Vec<f64>]) -> Vec<f64> {
    let n = xs.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = kernel.signal_variance + kernel.noise_variance;
        for j in 0..i {
            let v = kernel.eval(&xs[i], &xs[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpPrediction {
    pub mean: f64,
    pub std: f64,
    /// The raw variance came out negative and was clamped to zero.
    pub clamped: bool,
}

/// Conditioned GP: training data, Cholesky factor and cached `alpha`.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: RbfKernel,
    inputs: Vec<Vec<f64>>,
    y_mean: f64,
    centered: Vec<f64>,
    chol: Cholesky,
    alpha: Vec<f64>,
}

impl GpModel {
    /// Condition on `(inputs, targets)` with a fixed kernel. Targets are
    /// centered on their mean before conditioning.
    pub fn condition(kernel: RbfKernel, inputs: Vec<Vec<f64>>, targets: &[f64]) -> Result<Self> {
        kernel.validate()?;
        if inputs.len() < 2 || inputs.len() != targets.len() {
            return Err(Error::invalid("GP needs at least two samples with matching targets"));
        }
        let d = inputs[0].len();
        for x in &inputs {
            check_dim(d, x.len())?;
        }
        let y_mean = stats::mean(targets);
        let centered: Vec<f64> = targets.iter().map(|y| y - y_mean).collect();
        let n = inputs.len();
        let chol = Cholesky::factor_with_jitter(&covariance(&kernel, &inputs), n)?;
        let alpha = chol.solve(&centered);
        Ok(GpModel {
            kernel,
            inputs,
            y_mean,
            centered,
            chol,
            alpha,
        })
    }

    pub fn kernel(&self) -> &RbfKernel {
        &self.kernel
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn jitter(&self) -> f64 {
        self.chol.jitter
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    /// Log marginal likelihood of the centered training targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let fit: f64 = self.alpha.iter().zip(&self.centered).map(|(a, y)| a * y).sum();
        let n = self.len() as f64;
        -0.5 * fit - 0.5 * self.chol.log_det() - 0.5 * n * LN_2PI
    }

    /// Predictive mean and standard deviation (observation noise included).
    pub fn predict_dist(&self, x: &[f64]) -> Result<GpPrediction> {
        check_dim(self.input_dim(), x.len())?;
        let kstar: Vec<f64> = self.inputs.iter().map(|xi| self.kernel.eval(xi, x)).collect();
        let mean = self.y_mean + kstar.iter().zip(&self.alpha).map(|(k, a)| k * a).sum::<f64>();
        let mut v = kstar;
        self.chol.forward_in_place(&mut v);
        let raw = self.kernel.signal_variance - v.iter().map(|t| t * t).sum::<f64>()
            + self.kernel.noise_variance;
        let clamped = raw < 0.0;
        Ok(GpPrediction {
            mean,
            std: raw.max(0.0).sqrt(),
            clamped,
        })
    }
}

impl Surrogate for GpModel {
    fn input_dim(&self) -> usize {
        GpModel::input_dim(self)
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_dist(x)?.mean)
    }
}

/// Log marginal likelihood and its gradient with respect to the log
/// hyperparameters. With `fit_noise == false` the noise is fixed at zero and
/// the third gradient component is reported as zero.
pub fn lml_with_gradient(
    log_params: [f64; 3],
    fit_noise: bool,
    inputs: &[Vec<f64>],
    targets: &[f64],
) -> Result<(f64, [f64; 3])> {
    let mut kernel = RbfKernel::from_log_params(log_params);
    if !fit_noise {
        kernel.noise_variance = 0.0;
    }
    let n = inputs.len();
    let k = covariance(&kernel, inputs);
    let chol = Cholesky::factor_with_jitter(&k, n)?;
    let alpha = chol.solve(targets);
    let lml = -0.5 * alpha.iter().zip(targets).map(|(a, y)| a * y).sum::<f64>()
        - 0.5 * chol.log_det()
        - 0.5 * n as f64 * LN_2PI;
    let kinv = chol.inverse();
    // dLML/dθ = 0.5 tr((α αᵀ - K⁻¹) dK/dθ); W = α αᵀ - K⁻¹ is symmetric
    let inv_l2 = 1.0 / (kernel.lengthscale * kernel.lengthscale);
    let mut g_len = 0.0;
    let mut g_sig = 0.0;
    let mut g_noise = 0.0;
    for i in 0..n {
        let w_ii = alpha[i] * alpha[i] - kinv[i * n + i];
        g_sig += 0.5 * w_ii * kernel.signal_variance;
        g_noise += 0.5 * w_ii * kernel.noise_variance;
        for j in 0..i {
            let w = alpha[i] * alpha[j] - kinv[i * n + j];
            let r2 = sq_dist(&inputs[i], &inputs[j]);
            let kij = k[i * n + j];
            // off-diagonal pairs appear twice in the trace
            g_sig += w * kij;
            g_len += w * kij * r2 * inv_l2;
        }
    }
    if !fit_noise {
        g_noise = 0.0;
    }
    Ok((lml, [g_len, g_sig, g_noise]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpFitConfig {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Optimize observation noise; when false the GP interpolates.
    pub fit_noise: bool,
    /// Hyperparameters are optimized on at most this many seeded rows.
    pub max_fit_samples: Option<usize>,
}

impl Default for GpFitConfig {
    fn default() -> Self {
        GpFitConfig {
            restarts: 10,
            seed: 0,
            max_iters: 60,
            fit_noise: true,
            max_fit_samples: Some(300),
        }
    }
}

/// Log-parameter box for restarts and optimization, in standardized target units.
const LOG_BOUNDS: [(f64, f64); 3] = [(-6.9, 6.9), (-9.2, 9.2), (-23.0, 2.3)];
const INIT_BOX: [(f64, f64); 3] = [(-2.3, 2.3), (-2.3, 2.3), (-13.8, -2.3)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartOutcome {
    pub initial: [f64; 3],
    pub optimized: Option<[f64; 3]>,
    /// LML on standardized targets of the hyperparameter subset.
    pub lml: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GpFit {
    pub model: GpModel,
    pub restarts: Vec<RestartOutcome>,
    pub best_restart: usize,
}

fn clamp_log(mut p: [f64; 3], fit_noise: bool) -> [f64; 3] {
    for (v, (lo, hi)) in p.iter_mut().zip(LOG_BOUNDS) {
        *v = v.clamp(lo, hi);
    }
    if !fit_noise {
        p[2] = LOG_BOUNDS[2].0;
    }
    p
}

/// Projected gradient ascent with backtracking on the log hyperparameters.
fn ascend(
    start: [f64; 3],
    fit_noise: bool,
    xs: &[Vec<f64>],
    ys: &[f64],
    max_iters: usize,
) -> Result<([f64; 3], f64)> {
    let mut p = clamp_log(start, fit_noise);
    let (mut f, mut g) = lml_with_gradient(p, fit_noise, xs, ys)?;
    for _ in 0..max_iters {
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax < 1e-6 {
            break;
        }
        let mut step = 1.0 / gmax;
        let mut moved = false;
        for _ in 0..40 {
            let cand = clamp_log(
                [p[0] + step * g[0], p[1] + step * g[1], p[2] + step * g[2]],
                fit_noise,
            );
            let gain: f64 = (0..3).map(|i| g[i] * (cand[i] - p[i])).sum();
            if let Ok((fc, gc)) = lml_with_gradient(cand, fit_noise, xs, ys) {
                if fc.is_finite() && fc >= f + 1e-4 * gain {
                    let improved = fc - f;
                    p = cand;
                    f = fc;
                    g = gc;
                    moved = improved > 1e-10 * f.abs().max(1.0);
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok((p, f))
}

/// Fit kernel hyperparameters by maximizing the log marginal likelihood over
/// seeded restarts, then condition on all rows with the best kernel.
///
/// Restart `r` draws its starting point from an independent stream derived
/// from `(seed, r)`, so a run with more restarts extends one with fewer.
pub fn gp_fit(inputs: &[Vec<f64>], targets: &[f64], config: &GpFitConfig) -> Result<GpFit> {
    if inputs.len() < 2 || inputs.len() != targets.len() {
        return Err(Error::invalid("GP fit needs at least two samples"));
    }
    if config.restarts == 0 {
        return Err(Error::invalid("GP fit needs at least one restart"));
    }
    let y_mean = stats::mean(targets);
    let y_std = match stats::population_std(targets) {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let mut rows: Vec<usize> = (0..inputs.len()).collect();
    if let Some(m) = config.max_fit_samples {
        if rows.len() > m.max(2) {
            rows.shuffle(&mut stats::rng(stats::derive_seed(config.seed, u64::MAX)));
            rows.truncate(m.max(2));
            rows.sort_unstable();
        }
    }
    let xs: Vec<Vec<f64>> = rows.iter().map(|&i| inputs[i].clone()).collect();
    let ys: Vec<f64> = rows.iter().map(|&i| (targets[i] - y_mean) / y_std).collect();

    let restarts: Vec<RestartOutcome> = par_map(config.restarts, |r| {
        let mut rng = stats::rng(stats::derive_seed(config.seed, r as u64));
        let initial = INIT_BOX.map(|(lo, hi)| rng.gen_range(lo..hi));
        match ascend(initial, config.fit_noise, &xs, &ys, config.max_iters) {
            Ok((p, f)) => RestartOutcome {
                initial,
                optimized: Some(p),
                lml: Some(f),
            },
            Err(_) => RestartOutcome {
                initial,
                optimized: None,
                lml: None,
            },
        }
    });
    let (best_restart, best) = restarts
        .iter()
        .enumerate()
        .filter_map(|(i, r)| Some((i, r.lml?, r.optimized?)))
        .fold(None, |acc: Option<(usize, f64, [f64; 3])>, cur| match acc {
            Some(a) if a.1 >= cur.1 => Some(a),
            _ => Some(cur),
        })
        .map(|(i, _, p)| (i, p))
        .ok_or(Error::GpFitFailed)?;

    let std_kernel = RbfKernel::from_log_params(best);
    let scale = y_std * y_std;
    let kernel = RbfKernel {
        lengthscale: std_kernel.lengthscale,
        signal_variance: std_kernel.signal_variance * scale,
        noise_variance: if config.fit_noise {
            std_kernel.noise_variance * scale
        } else {
            0.0
        },
    };
    let model = GpModel::condition(kernel, inputs.to_vec(), targets)?;
    Ok(GpFit {
        model,
        restarts,
        best_restart,
    })
}

/// Best standardized LML over the given restarts (failed restarts ignored).
pub fn best_lml(restarts: &[RestartOutcome]) -> Option<f64> {
    restarts.iter().filter_map(|r| r.lml).reduce(f64::max)
}
