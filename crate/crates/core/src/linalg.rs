//! Dense symmetric linear algebra on row-major `Vec<f64>` matrices.

use crate::{Error, Result};

/// Lower-triangular Cholesky factor of an `n x n` SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
    /// Diagonal jitter that was added before the factorization succeeded.
    pub jitter: f64,
}

/// Jitter escalations tried after the plain factorization fails.
pub const MAX_JITTER_ESCALATIONS: usize = 6;

impl Cholesky {
    pub fn factor(a: &[f64], n: usize) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let row_j = j * n;
            let mut d = a[row_j + j];
            for k in 0..j {
                d -= l[row_j + k] * l[row_j + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[row_j + j] = d;
            for i in (j + 1)..n {
                let row_i = i * n;
                let mut s = a[row_i + j];
                for k in 0..j {
                    s -= l[row_i + k] * l[row_j + k];
                }
                l[row_i + j] = s / d;
            }
        }
        Some(Cholesky { n, l, jitter: 0.0 })
    }

    /// Factor, escalating a diagonal jitter of `1e-10 * trace / n`, doubled on
    /// every further failure.
    pub fn factor_with_jitter(a: &[f64], n: usize) -> Result<Self> {
        if let Some(c) = Self::factor(a, n) {
            return Ok(c);
        }
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        let mut jitter = 1e-10 * trace / n.max(1) as f64;
        let mut work = a.to_vec();
        for _ in 0..MAX_JITTER_ESCALATIONS {
            for i in 0..n {
                work[i * n + i] = a[i * n + i] + jitter;
            }
            if let Some(mut c) = Self::factor(&work, n) {
                c.jitter = jitter;
                return Ok(c);
            }
            jitter *= 2.0;
        }
        Err(Error::NotPositiveDefinite {
            attempts: MAX_JITTER_ESCALATIONS,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)` of the lower factor.
    pub fn lower(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.l[i * self.n + j]
        }
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.l[i * self.n + i]
    }

    /// `log |A| = 2 sum log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.diag(i).ln()).sum::<f64>()
    }

    /// Solve `L z = b` in place.
    pub fn forward_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(l, z)| l * z).sum();
            b[i] = (b[i] - s) / self.l[i * n + i];
        }
    }

    /// Solve `L^T z = b` in place.
    pub fn backward_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut z = b.to_vec();
        self.forward_in_place(&mut z);
        self.backward_in_place(&mut z);
        z
    }

    /// Full inverse of the factored matrix (row-major).
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        // invert L column by column, then A^-1 = L^-T L^-1
        let mut linv = vec![0.0; n * n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            self.forward_in_place(&mut e);
            for i in 0..n {
                linv[i * n + j] = e[i];
            }
        }
        let mut inv = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = 0.0;
                for k in i..n {
                    s += linv[k * n + i] * linv[k * n + j];
                }
                inv[i * n + j] = s;
                inv[j * n + i] = s;
            }
        }
        inv
    }
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order with matching unit eigenvectors
/// (each vector is a row of the returned matrix).
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&j| (0..n).map(|k| v[k * n + j]).collect())
        .collect();
    (values, vectors)
}
