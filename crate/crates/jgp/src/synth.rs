//! Synthetic data for the damped-sine toy problem and the bias/noise
//! robustness sweep.

use ndarray::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};

/// Configuration for one synthetic sample: inputs uniform on `range`,
/// targets `damped_sine(x, bias)` plus Gaussian noise of std `noise_std`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ToyConfig {
    pub bias: f64,
    pub noise_std: f64,
    pub range: (f64, f64),
    pub count: usize,
    pub seed: u64,
}

impl ToyConfig {
    /// Real-data defaults: unbiased, sigma = 0.3, inputs on [-0.6, 0.4].
    pub fn real_default(count: usize, seed: u64) -> Self {
        Self { bias: 0.0, noise_std: 0.3, range: (-0.6, 0.4), count, seed }
    }

    /// Simulated-data defaults: inputs on [-1, 1]; bias and noise are the
    /// quantities the robustness sweep varies.
    pub fn sim_default(bias: f64, noise_std: f64, count: usize, seed: u64) -> Self {
        Self { bias, noise_std, range: (-1.0, 1.0), count, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range.0 < self.range.1) {
            return Err(Error::InvalidParameter(format!(
                "toy range must satisfy lo < hi, got ({}, {})",
                self.range.0, self.range.1
            )));
        }
        if self.count < 1 {
            return Err(Error::InvalidParameter("toy sample count must be >= 1".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "toy noise_std must be nonnegative and finite, got {}",
                self.noise_std
            )));
        }
        if !self.bias.is_finite() {
            return Err(Error::InvalidParameter("toy bias must be finite".into()));
        }
        Ok(())
    }
}

/// Deterministic part of the toy latent function: `b + exp(-x) sin(2 pi x)`.
pub fn damped_sine(x: f64, b: f64) -> f64 {
    b + (-x).exp() * (2.0 * std::f64::consts::PI * x).sin()
}

/// One synthetic draw; bit-reproducible per seed. All rows are labeled 0;
/// callers relabel simulated draws with [`LabeledDataset::with_label`].
pub fn generate_toy(config: &ToyConfig) -> Result<LabeledDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x = Array2::from_shape_fn((config.count, 1), |_| {
        rng.random_range(config.range.0..config.range.1)
    });
    let y = if config.noise_std > 0.0 {
        let noise = Normal::new(0.0, config.noise_std)
            .map_err(|e| Error::InvalidParameter(format!("noise distribution: {e}")))?;
        Array1::from_shape_fn(config.count, |i| {
            damped_sine(x[[i, 0]], config.bias) + noise.sample(&mut rng)
        })
    } else {
        Array1::from_shape_fn(config.count, |i| damped_sine(x[[i, 0]], config.bias))
    };
    LabeledDataset::unlabeled(x, y)
}
