//! Least-squares (discriminative) joint GP: closed-form dual weights from
//! the weighted kernel-ridge objective
//!
//! ```text
//! alpha = (K_nr K_rn + lambda1 K_ns K_sn + lambda2 K_nn)^-1
//!         (K_nr y_r + lambda1 K_ns y_s)
//! ```
//!
//! with `lambda1` weighting the simulated-data errors and `lambda2` the
//! ridge penalty. The published closed-form display swaps the lambda indices
//! relative to the derivation above it and typesets the right-hand side as a
//! bracketed juxtaposition; we follow the derivation (lambda1 on the
//! simulated term, a summed right-hand side), which is the only reading
//! under which lambda1 = 0 reduces to standard kernel ridge on the real rows
//! and the duality with the probabilistic joint GP holds.
//!
//! This module exists as an independent consistency oracle: with
//! `lambda1 = gamma` and `lambda2 = sigma_e^2` its predictive means must
//! match `jgp_predict`. Means only; no variance is produced.

use ndarray::prelude::*;

use crate::error::{Error, Result};
use crate::kernel;

/// Dual weights of the least-squares joint GP.
#[derive(Debug, Clone)]
pub struct RidgeWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lengthscale: f64,
    pub alpha: Array1<f64>,
}

/// Closed-form dual weights for a two-source dataset (labels 0 and 1).
pub fn lsjgp_fit(
    x: &Array2<f64>,
    y: &Array1<f64>,
    labels: &[usize],
    lambda1: f64,
    lambda2: f64,
    lengthscale: f64,
) -> Result<RidgeWeights> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            context: "target vector length".into(),
            expected: n,
            actual: y.len(),
        });
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            context: "label vector length".into(),
            expected: n,
            actual: labels.len(),
        });
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::Labels(
            "least-squares joint GP supports exactly one simulated source (labels 0 and 1)"
                .into(),
        ));
    }
    if !(lambda1 >= 0.0 && lambda1.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda1 must be nonnegative and finite, got {lambda1}"
        )));
    }
    if !(lambda2 > 0.0 && lambda2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda2 must be positive and finite, got {lambda2}"
        )));
    }

    let real: Vec<usize> = (0..n).filter(|&i| labels[i] == 0).collect();
    let sim: Vec<usize> = (0..n).filter(|&i| labels[i] == 1).collect();
    if real.is_empty() {
        return Err(Error::Labels("least-squares joint GP needs at least one real row".into()));
    }

    let knn = kernel::build_kernel_matrix(x, lengthscale)?;
    let yr = y.select(Axis(0), &real);

    // With lambda1 = 0 (or no simulated rows at all) the objective is plain
    // kernel ridge on the real rows and simulated rows carry zero weight.
    // Solving that reduced system directly instead of the squared-kernel
    // normal equations keeps the reduction exact instead of
    // condition-limited.
    if lambda1 == 0.0 || sim.is_empty() {
        let mut krr = knn.select(Axis(0), &real).select(Axis(1), &real);
        for i in 0..real.len() {
            krr[[i, i]] += lambda2;
        }
        let beta = kernel::factorize(&krr)?.solve_vec(yr.view())?;
        let mut alpha = Array1::zeros(n);
        for (i, &row) in real.iter().enumerate() {
            alpha[row] = beta[i];
        }
        return Ok(RidgeWeights { lambda1, lambda2, lengthscale, alpha });
    }

    let knr = knn.select(Axis(1), &real);
    let kns = knn.select(Axis(1), &sim);
    let ys = y.select(Axis(0), &sim);

    // A = K_nr K_rn + lambda1 K_ns K_sn + lambda2 K_nn  (symmetric PSD).
    let a = knr.dot(&knr.t()) + lambda1 * kns.dot(&kns.t()) + lambda2 * &knn;
    let rhs = knr.dot(&yr) + lambda1 * kns.dot(&ys);

    let factor = kernel::factorize(&a)?;
    let mut alpha = factor.solve_vec(rhs.view())?;
    // One step of iterative refinement: the normal equations square the
    // kernel's condition number, and this recovers most of the accuracy the
    // first solve loses to that.
    let residual = &rhs - &a.dot(&alpha);
    alpha = alpha + factor.solve_vec(residual.view())?;
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("least-squares dual weights are non-finite".into()));
    }
    Ok(RidgeWeights { lambda1, lambda2, lengthscale, alpha })
}

/// Predictive means `k*^T alpha` at each row of `xstar`; no variances.
pub fn lsjgp_predict(
    weights: &RidgeWeights,
    x: &Array2<f64>,
    xstar: &Array2<f64>,
) -> Result<Array1<f64>> {
    if x.nrows() != weights.alpha.len() {
        return Err(Error::DimensionMismatch {
            context: "model input rows vs dual weights".into(),
            expected: weights.alpha.len(),
            actual: x.nrows(),
        });
    }
    if xstar.ncols() != x.ncols() {
        return Err(Error::DimensionMismatch {
            context: "test input dimension".into(),
            expected: x.ncols(),
            actual: xstar.ncols(),
        });
    }
    let kx = kernel::build_cross_kernel(x, xstar, weights.lengthscale)?;
    Ok(kx.t().dot(&weights.alpha))
}
