//! Out-of-distribution detection for neural-network surrogates of expensive
//! simulators.
//!
//! The crate trains feedforward-network and Gaussian-process surrogates on
//! oracle data, summarizes how each input perturbs the network through a
//! four-component local sensitivity profile, labels high-error inputs from a
//! bootstrap error margin, learns an ID/OOD classifier on the profiles, and
//! routes queries between the surrogate and the oracle.
//!
//! Module map:
//!
//! * [`dataset`]: design space, Latin hypercube sampling, synthetic oracles,
//!   normalization, k-fold splits and CSV interchange.
//! * [`fnn`]: ReLU network surrogate with Adam training, input Jacobians and
//!   grid-search cross-validation.
//! * [`gp`]: RBF Gaussian-process baseline fitted by marginal likelihood.
//! * [`sensitivity`]: `[SA, SV, JA, JV]` profiles.
//! * [`labeling`]: bootstrap error margin and OOD labels.
//! * [`detector`]: oversampling, gradient boosting, PR metrics and the
//!   neighbor-deviation baseline.
//! * [`hybrid`]: surrogate/oracle routing and error/speedup metrics.
//! * `pipeline` (feature `cli`): staged end-to-end runs driven by a TOML file.

pub mod dataset;
pub mod detector;
pub mod error;
pub mod fnn;
pub mod gp;
pub mod hybrid;
pub mod labeling;
pub mod linalg;
pub mod pca;
#[cfg(feature = "cli")]
pub mod pipeline;
pub mod sensitivity;
pub mod stats;

pub use error::{Error, Result};

/// A scalar-output model over standardized inputs.
pub trait Surrogate {
    fn input_dim(&self) -> usize;

    fn predict(&self, x: &[f64]) -> Result<f64>;
}

/// A surrogate whose input gradient is available in closed form.
pub trait Differentiable: Surrogate {
    /// Gradient of the scalar output with respect to the input, written into `out`.
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.input_dim()];
        self.gradient_into(x, &mut out)?;
        Ok(out)
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Order-preserving map over `0..n`, parallel when the `parallel` feature is on.
pub(crate) fn par_map<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// JSON persistence for model and report types.
pub mod persist {
    use std::path::Path;

    use serde::{de::DeserializeOwned, Serialize};

    use crate::Result;

    pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
        std::fs::write(path, to_json_string(value)?)?;
        Ok(())
    }

    pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
