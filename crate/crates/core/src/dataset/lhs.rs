use rand::seq::SliceRandom;
use rand::Rng;

use super::DesignSpace;
use crate::{stats, Error, Result};

/// Latin hypercube design of `n` points.
///
/// Each dimension is cut into `n` equal strata and every stratum receives
/// exactly one point; the stratum-to-point assignment is an independent
/// random permutation per dimension.
pub fn lhs_sample(space: &DesignSpace, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::invalid("LHS needs n >= 1"));
    }
    let mut rng = stats::rng(seed);
    let d = space.dims();
    let mut points = vec![vec![0.0; d]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for (j, &(lo, hi)) in space.bounds().iter().enumerate() {
        perm.shuffle(&mut rng);
        let width = hi - lo;
        for (i, p) in points.iter_mut().enumerate() {
            // keep the jitter away from stratum edges so rounding cannot
            // move a point into a neighboring stratum
            let u: f64 = rng.gen_range(1e-9..1.0 - 1e-9);
            p[j] = lo + width * ((perm[i] as f64 + u) / n as f64);
        }
    }
    Ok(points)
}
