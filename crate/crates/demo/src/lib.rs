//! WebAssembly bindings for the static page in `www/`.

use surrogate_ood::dataset::{lhs_sample, DesignSpace, NormalizationStats, OracleKind, OracleSpec};
use surrogate_ood::fnn::{train, FnnArchitecture, FnnModel, TrainConfig};
use surrogate_ood::hybrid::{speedup_hybrid, speedup_pure};
use surrogate_ood::sensitivity::{profile, PerturbationSpec};
use surrogate_ood::Surrogate;
use wasm_bindgen::prelude::*;

fn js(e: surrogate_ood::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `n` Latin hypercube points on the unit square, flattened as `x0, y0, x1, ...`.
#[wasm_bindgen]
pub fn lhs_square(n: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    let space = DesignSpace::unit(2).map_err(js)?;
    Ok(lhs_sample(&space, n, seed).map_err(js)?.concat())
}

/// `[S_pure, S_hybrid]` for per-call times in seconds and surrogate share `p`.
#[wasm_bindgen]
pub fn speedups(t_oracle: f64, t_surrogate: f64, t_detector: f64, p: f64) -> Result<Vec<f64>, JsError> {
    Ok(vec![
        speedup_pure(t_oracle, t_surrogate).map_err(js)?,
        speedup_hybrid(t_oracle, t_surrogate, t_detector, p).map_err(js)?,
    ])
}

/// A network fitted to a one-dimensional regime-switching oracle on
/// `[0, train_hi]`, probed over the whole unit interval.
#[wasm_bindgen]
pub struct SliceDemo {
    oracle: OracleSpec,
    norm: NormalizationStats,
    model: FnnModel,
    train_x: Vec<f64>,
}

#[wasm_bindgen]
impl SliceDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(train_hi: f64, n_train: usize, epochs: usize, seed: u64) -> Result<SliceDemo, JsError> {
        let oracle = OracleSpec::new(OracleKind::RegimeSwitchTtcLike, seed);
        let space = DesignSpace::uniform(1, 0.0, train_hi).map_err(js)?;
        let xs = lhs_sample(&space, n_train, seed).map_err(js)?;
        let ys = xs.iter().map(|x| oracle.eval(x)).collect::<Result<Vec<_>, _>>().map_err(js)?;
        let norm = NormalizationStats::fit(&xs, &ys).map_err(js)?;
        let zs = norm.apply_all(&xs).map_err(js)?;
        let arch = FnnArchitecture::new(1, [32, 32, 64]).map_err(js)?;
        let config = TrainConfig {
            epochs,
            learning_rate: 3e-3,
            seed,
            ..Default::default()
        };
        let model = train(&zs, &ys, &arch, &config).map_err(js)?;
        Ok(SliceDemo {
            oracle,
            norm,
            model,
            train_x: xs.concat(),
        })
    }

    pub fn training_inputs(&self) -> Vec<f64> {
        self.train_x.clone()
    }

    /// `n` grid rows over `[0, 1]`, flattened as `x, oracle, prediction, SA, SV, JA, JV`.
    pub fn curve(&self, n: usize, delta: f64, n_perturb: usize) -> Result<Vec<f64>, JsError> {
        let spec = PerturbationSpec {
            delta,
            n_perturb,
            seed: self.oracle.seed,
        };
        let mut out = Vec::with_capacity(n * 7);
        for i in 0..n {
            let x = [i as f64 / (n.max(2) - 1) as f64];
            let z = self.norm.apply(&x).map_err(js)?;
            out.push(x[0]);
            out.push(self.oracle.eval(&x).map_err(js)?);
            out.push(self.model.predict(&z).map_err(js)?);
            out.extend(profile(&self.model, &z, &spec.for_point(i)).map_err(js)?.to_array());
        }
        Ok(out)
    }
}
