//! Synthetic stand-ins for an expensive high-fidelity simulator.
//!
//! All three functions are defined on the unit cube `[0, 1]^d` and draw their
//! coefficients from the oracle seed, so `(kind, seed, x)` fully determines the
//! output. Points outside the cube are evaluated but flagged.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{stats, Error, Result};

/// Simulated wall time of one oracle call: 02h:57m:58s.
pub const DEFAULT_ORACLE_SECONDS: f64 = 10_678.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Globally smooth, convex growth along the leading coordinates.
    SmoothMtowLike,
    /// Gentle polynomial base plus a jump across a curved regime boundary,
    /// steepening with depth into the upper regime.
    RegimeSwitchTtcLike,
    /// Mild interactions and a saturating term.
    ModerateBflLike,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub kind: OracleKind,
    pub seed: u64,
    /// Simulated seconds per call; used only in speedup arithmetic.
    pub cost_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOutput {
    pub value: f64,
    pub cost_seconds: f64,
    pub in_bounds: bool,
}

struct Coefficients {
    linear: Vec<f64>,
    quadratic: Vec<f64>,
    growth: Vec<f64>,
    interaction: Vec<f64>,
}

impl Coefficients {
    fn draw(seed: u64, d: usize) -> Self {
        let mut rng = stats::rng(seed);
        let linear = (0..d).map(|_| rng.gen_range(0.5..1.5)).collect();
        let quadratic = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let growth = (0..d.min(3)).map(|_| rng.gen_range(0.8..1.2)).collect();
        let interaction = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        Coefficients {
            linear,
            quadratic,
            growth,
            interaction,
        }
    }
}

/// Jump added on the upper side of the regime boundary.
const REGIME_JUMP: f64 = 3.0;

impl OracleSpec {
    pub fn new(kind: OracleKind, seed: u64) -> Self {
        OracleSpec {
            kind,
            seed,
            cost_seconds: DEFAULT_ORACLE_SECONDS,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate(x)?.value)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<OracleOutput> {
        if x.is_empty() {
            return Err(Error::invalid("oracle input must be nonempty"));
        }
        let c = Coefficients::draw(self.seed, x.len());
        let value = match self.kind {
            OracleKind::SmoothMtowLike => smooth_base(&c, x) + growth(&c, x),
            OracleKind::RegimeSwitchTtcLike => {
                let g = regime_indicator(x);
                let base = smooth_base(&c, x);
                if g > 0.0 {
                    base + REGIME_JUMP + 3.0 * g
                } else {
                    base
                }
            }
            OracleKind::ModerateBflLike => {
                let d = x.len();
                let mut y = 0.0;
                for i in 0..d {
                    y += c.linear[i] * x[i] + c.interaction[i] * x[i] * x[(i + 1) % d];
                }
                y + (2.0 * (x[0] - 0.5)).tanh() + 0.5 * (PI * x[d / 2]).sin()
            }
        };
        if !value.is_finite() {
            return Err(Error::OracleNonFinite { x: x.to_vec() });
        }
        Ok(OracleOutput {
            value,
            cost_seconds: self.cost_seconds,
            in_bounds: x.iter().all(|v| (0.0..=1.0).contains(v)),
        })
    }
}

fn growth(c: &Coefficients, x: &[f64]) -> f64 {
    c.growth.iter().zip(x).map(|(g, v)| g * (2.2 * v).exp()).sum()
}

fn smooth_base(c: &Coefficients, x: &[f64]) -> f64 {
    let d = x.len();
    let mut y = 0.0;
    for i in 0..d {
        y += c.linear[i] * x[i] + 0.3 * c.quadratic[i] * x[i] * x[i];
    }
    y + 0.4 * (PI * (x[0] + x[d - 1])).sin()
}

/// Positive on the upper regime: a curved cut through the upper corner of the
/// leading coordinates.
fn regime_indicator(x: &[f64]) -> f64 {
    let d = x.len();
    let a = x[0];
    let b = x[1 % d];
    let s = x[2 % d];
    0.6 * a + 0.4 * b + 0.1 * (2.0 * PI * s).sin() - 0.5
}
