//! Standard Gaussian-process regression with homoscedastic noise: the
//! baselines trained on real data only, simulated data only, or both pooled.
//!
//! The predictive distribution targets the noisy observation `y*`, so the
//! predictive variance includes the noise term `sigma_e^2`; the noise-free
//! latent variance is exposed separately on [`Prediction`] for diagnostics.

use log::warn;
use ndarray::prelude::*;

use crate::error::{Error, Result};
use crate::jgp::{NoiseWeightMatrix, SourceLabels};
use crate::kernel::{self, CovarianceFactor};

/// Kernel and noise hyperparameters. `trust` holds one entry per simulated
/// source and is empty for a plain GP.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Hyperparameters {
    pub lengthscale: f64,
    pub noise_std: f64,
    #[serde(default)]
    pub trust: Vec<f64>,
}

impl Hyperparameters {
    pub fn new(lengthscale: f64, noise_std: f64, trust: Vec<f64>) -> Result<Self> {
        let hp = Self { lengthscale, noise_std, trust };
        hp.validate()?;
        Ok(hp)
    }

    /// Plain-GP hyperparameters (no trust entries).
    pub fn plain(lengthscale: f64, noise_std: f64) -> Result<Self> {
        Self::new(lengthscale, noise_std, Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lengthscale > 0.0) || !self.lengthscale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lengthscale must be positive and finite, got {}",
                self.lengthscale
            )));
        }
        if !(self.noise_std > 0.0) || !self.noise_std.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise_std must be positive and finite, got {}",
                self.noise_std
            )));
        }
        for (k, g) in self.trust.iter().enumerate() {
            if !(*g > 0.0) || !g.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "trust[{k}] must be positive and finite, got {g}"
                )));
            }
        }
        Ok(())
    }
}

/// Predictive mean and variance at one test point.
///
/// `variance` is the variance of the noisy observation `y*` (it includes
/// `sigma_e^2`); `latent_variance` is the variance of the latent function
/// value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
    pub latent_variance: f64,
}

/// A fitted GP model: retained training data, factorized covariance, and
/// the dual weight vector `alpha = C_n^-1 y`.
///
/// Immutable after fitting; predictions are read-only and safe to run
/// concurrently on a shared model.
pub struct TrainedModel {
    x: Array2<f64>,
    y: Array1<f64>,
    labels: SourceLabels,
    hp: Hyperparameters,
    factor: CovarianceFactor,
    alpha: Array1<f64>,
}

impl TrainedModel {
    pub fn inputs(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn targets(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn labels(&self) -> &SourceLabels {
        &self.labels
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hp
    }

    pub fn factor(&self) -> &CovarianceFactor {
        &self.factor
    }

    pub fn alpha(&self) -> &Array1<f64> {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Predictive mean and variance at each row of `xstar`.
    ///
    /// Mean is `k*^T alpha`; variance is `c* - k*^T C_n^-1 k*` with
    /// `c* = k(x*, x*) + sigma_e^2`. The noise term is always the real-data
    /// `sigma_e^2`, never `sigma_e^2 / gamma`: predictions target the real
    /// distribution.
    pub fn predict(&self, xstar: &Array2<f64>) -> Result<Vec<Prediction>> {
        let kx = self.cross_kernel(xstar)?;
        let w = self.factor.solve_mat(kx.view())?;
        let noise_var = self.hp.noise_std * self.hp.noise_std;
        let cstar = 1.0 + noise_var;
        let mut out = Vec::with_capacity(xstar.nrows());
        for j in 0..xstar.nrows() {
            let col = kx.column(j);
            let mean = col.dot(&self.alpha);
            let explained: f64 = col.dot(&w.column(j));
            let mut variance = cstar - explained;
            if variance < -1e-10 {
                warn!("predictive variance {variance:.3e} clamped to 0 at test point {j}");
            }
            variance = variance.max(0.0);
            let latent_variance = (variance - noise_var).max(0.0);
            out.push(Prediction { mean, variance, latent_variance });
        }
        Ok(out)
    }

    /// Predictive means only; skips the variance solve.
    pub fn predict_mean(&self, xstar: &Array2<f64>) -> Result<Array1<f64>> {
        let kx = self.cross_kernel(xstar)?;
        Ok(kx.t().dot(&self.alpha))
    }

    fn cross_kernel(&self, xstar: &Array2<f64>) -> Result<Array2<f64>> {
        if xstar.ncols() != self.x.ncols() {
            return Err(Error::DimensionMismatch {
                context: "test input dimension".into(),
                expected: self.x.ncols(),
                actual: xstar.ncols(),
            });
        }
        kernel::build_cross_kernel(&self.x, xstar, self.hp.lengthscale)
    }
}

/// Shared fitting path: `C_n = K + sigma_e^2 V` with an arbitrary diagonal
/// noise-weight matrix.
pub(crate) fn fit_with_weights(
    x: &Array2<f64>,
    y: &Array1<f64>,
    labels: SourceLabels,
    hp: Hyperparameters,
    v: &NoiseWeightMatrix,
) -> Result<TrainedModel> {
    hp.validate()?;
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
    let mut c = kernel::build_kernel_matrix(x, hp.lengthscale)?;
    let noise_var = hp.noise_std * hp.noise_std;
    for i in 0..n {
        c[[i, i]] += noise_var * v.diag()[i];
    }
    let factor = kernel::factorize(&c)?;
    let alpha = factor.solve_vec(y.view())?;
    Ok(TrainedModel { x: x.clone(), y: y.clone(), labels, hp, factor, alpha })
}

/// Fit a plain GP: `C_n = K + sigma_e^2 I`, every row treated as real.
pub fn gp_fit(x: &Array2<f64>, y: &Array1<f64>, hp: Hyperparameters) -> Result<TrainedModel> {
    if !hp.trust.is_empty() {
        return Err(Error::InvalidParameter(
            "plain GP takes no trust parameters; use jgp_fit for labeled sources".into(),
        ));
    }
    let labels = SourceLabels::new(vec![0; x.nrows()])?;
    let v = NoiseWeightMatrix::identity(x.nrows());
    fit_with_weights(x, y, labels, hp, &v)
}

/// Predict with a plain GP model. Identical to [`TrainedModel::predict`].
pub fn gp_predict(model: &TrainedModel, xstar: &Array2<f64>) -> Result<Vec<Prediction>> {
    model.predict(xstar)
}
