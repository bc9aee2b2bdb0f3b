//! Squared-exponential kernel evaluation and positive-definite covariance
//! factorization.
//!
//! The kernel is isotropic: `k(x, x') = exp(-||x - x'||^2 / (2 l^2))` with a
//! single lengthscale `l`. All covariance solves go through a Cholesky factor;
//! the only place a full inverse is materialized is the leave-one-out
//! computation in [`crate::train`], which needs diagonal entries of the
//! inverse.

use faer::linalg::solvers::{DenseSolveCore, Llt, Solve};
use faer::{Mat, Side};
use ndarray::prelude::*;

use crate::error::{Error, Result};

/// Jitter escalation ladder, as multiples of `mean(diag(C))`.
const JITTER_LADDER: [f64; 4] = [0.0, 1e-10, 1e-8, 1e-6];

/// Squared-exponential kernel between two points.
///
/// Returns `exp(-||x1 - x2||^2 / (2 lengthscale^2))`, in `(0, 1]`.
pub fn se_kernel(x1: &[f64], x2: &[f64], lengthscale: f64) -> Result<f64> {
    if x1.len() != x2.len() {
        return Err(Error::DimensionMismatch {
            context: "se_kernel inputs".into(),
            expected: x1.len(),
            actual: x2.len(),
        });
    }
    if !(lengthscale > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lengthscale must be positive, got {lengthscale}"
        )));
    }
    let sq: f64 = x1
        .iter()
        .zip(x2)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum();
    Ok((-sq / (2.0 * lengthscale * lengthscale)).exp())
}

/// Pairwise squared Euclidean distances between the rows of `x`.
///
/// Computed once per dataset and reused across kernel evaluations at
/// different lengthscales.
pub fn pairwise_sq_dists(x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        let xi = x.row(i);
        for j in (i + 1)..n {
            let s: f64 = xi
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| {
                    let t = a - b;
                    t * t
                })
                .sum();
            d[[i, j]] = s;
            d[[j, i]] = s;
        }
    }
    d
}

/// Squared Euclidean distances between the rows of `a` (n) and of `b` (m),
/// as an n x m matrix.
pub fn cross_sq_dists(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            context: "cross_sq_dists input dimension".into(),
            expected: a.ncols(),
            actual: b.ncols(),
        });
    }
    let mut d = Array2::zeros((a.nrows(), b.nrows()));
    for i in 0..a.nrows() {
        let ai = a.row(i);
        for j in 0..b.nrows() {
            let s: f64 = ai
                .iter()
                .zip(b.row(j))
                .map(|(p, q)| {
                    let t = p - q;
                    t * t
                })
                .sum();
            d[[i, j]] = s;
        }
    }
    Ok(d)
}

/// Apply the SE kernel to a matrix of squared distances.
pub fn kernel_from_sq_dists(sq: &Array2<f64>, lengthscale: f64) -> Result<Array2<f64>> {
    if !(lengthscale > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lengthscale must be positive, got {lengthscale}"
        )));
    }
    let inv = 1.0 / (2.0 * lengthscale * lengthscale);
    Ok(sq.mapv(|v| (-v * inv).exp()))
}

/// Full SE kernel matrix `K[i, j] = k(x_i, x_j)`.
///
/// Symmetric with an exactly unit diagonal.
pub fn build_kernel_matrix(x: &Array2<f64>, lengthscale: f64) -> Result<Array2<f64>> {
    kernel_from_sq_dists(&pairwise_sq_dists(x), lengthscale)
}

/// Cross kernel matrix between training rows `x` (n) and test rows `xstar`
/// (m), as an n x m matrix.
pub fn build_cross_kernel(
    x: &Array2<f64>,
    xstar: &Array2<f64>,
    lengthscale: f64,
) -> Result<Array2<f64>> {
    kernel_from_sq_dists(&cross_sq_dists(x, xstar)?, lengthscale)
}

/// Cholesky factor of a covariance matrix `C + jitter * I`, with the jitter
/// actually applied recorded alongside.
pub struct CovarianceFactor {
    llt: Llt<f64>,
    jitter: f64,
    n: usize,
}

impl CovarianceFactor {
    /// Jitter that was added to the diagonal before factorization succeeded.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Lower-triangular Cholesky factor `L` with `L L^T = C + jitter I`.
    pub fn lower(&self) -> Array2<f64> {
        let l = self.llt.L();
        Array2::from_shape_fn((self.n, self.n), |(i, j)| if j <= i { l[(i, j)] } else { 0.0 })
    }

    /// Solve `(C + jitter I) x = b` for a vector right-hand side.
    pub fn solve_vec(&self, b: ArrayView1<f64>) -> Result<Array1<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "solve right-hand side".into(),
                expected: self.n,
                actual: b.len(),
            });
        }
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.llt.solve(&rhs);
        Ok(Array1::from_shape_fn(self.n, |i| x[(i, 0)]))
    }

    /// Solve `(C + jitter I) X = B` for a matrix right-hand side.
    pub fn solve_mat(&self, b: ArrayView2<f64>) -> Result<Array2<f64>> {
        if b.nrows() != self.n {
            return Err(Error::DimensionMismatch {
                context: "solve right-hand side".into(),
                expected: self.n,
                actual: b.nrows(),
            });
        }
        let m = b.ncols();
        let rhs = Mat::from_fn(self.n, m, |i, j| b[[i, j]]);
        let x = self.llt.solve(&rhs);
        Ok(Array2::from_shape_fn((self.n, m), |(i, j)| x[(i, j)]))
    }

    /// Diagonal of `(C + jitter I)^-1`.
    ///
    /// This is the one place a full inverse is formed; the leave-one-out
    /// identities need every diagonal entry.
    pub fn inverse_diag(&self) -> Array1<f64> {
        let inv = self.llt.inverse();
        Array1::from_shape_fn(self.n, |i| inv[(i, i)])
    }
}

/// Factorize a symmetric covariance matrix, escalating jitter through
/// `{0, 1e-10, 1e-8, 1e-6} * mean(diag C)` until the Cholesky succeeds.
pub fn factorize(c: &Array2<f64>) -> Result<CovarianceFactor> {
    let n = c.nrows();
    if n == 0 || c.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "factorize input (square, nonempty)".into(),
            expected: n.max(1),
            actual: c.ncols(),
        });
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("covariance matrix has non-finite entries".into()));
    }
    let mean_diag = c.diag().mean().unwrap_or(1.0).abs().max(f64::MIN_POSITIVE);
    let mut last_jitter = 0.0;
    for scale in JITTER_LADDER {
        let jitter = scale * mean_diag;
        last_jitter = jitter;
        let m = Mat::from_fn(n, n, |i, j| {
            if i == j {
                c[[i, j]] + jitter
            } else {
                c[[i, j]]
            }
        });
        if let Ok(llt) = Llt::new(m.as_ref(), Side::Lower) {
            return Ok(CovarianceFactor { llt, jitter, n });
        }
    }
    Err(Error::NotPositiveDefinite {
        min_pivot: min_pivot(c, last_jitter),
        jitter: last_jitter,
    })
}

/// First nonpositive pivot encountered by an unblocked Cholesky of
/// `C + jitter I`; used only to report factorization failures.
fn min_pivot(c: &Array2<f64>, jitter: f64) -> f64 {
    let n = c.nrows();
    let mut l = vec![0.0f64; n * n];
    for j in 0..n {
        let mut pivot = c[[j, j]] + jitter;
        for k in 0..j {
            pivot -= l[j * n + k] * l[j * n + k];
        }
        if pivot <= 0.0 {
            return pivot;
        }
        let lj = pivot.sqrt();
        l[j * n + j] = lj;
        for i in (j + 1)..n {
            let mut s = c[[i, j]];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / lj;
        }
    }
    // Factorization succeeded after all; report the smallest pivot squared.
    (0..n).map(|i| l[i * n + i] * l[i * n + i]).fold(f64::INFINITY, f64::min)
}
