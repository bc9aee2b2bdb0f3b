//! Joint GP: a GP whose noise covariance distinguishes real from simulated
//! rows through per-source trust parameters.
//!
//! The covariance is `C_n = K + sigma_e^2 V` with `V` diagonal: weight 1 on
//! real rows and `1/gamma_k` on rows of simulated source `k`. A large
//! `gamma_k` means source `k` is modeled as less noisy than the real data and
//! contributes more to the fit; a small one quenches its dual weights.
//!
//! Note on prediction: the predictive variance uses `c* = k(x*, x*) +
//! sigma_e^2` with the real-data noise variance, never `sigma_e^2 / gamma`.
//! The model is trained to predict the real distribution, so test points are
//! treated as real observations. This is an interpretation the covariance
//! construction leaves open, and it is deliberate.

use ndarray::prelude::*;

use crate::error::{Error, Result};
use crate::gp::{fit_with_weights, Hyperparameters, Prediction, TrainedModel};

/// Per-row source labels: 0 = real, k in 1..=m = simulated source k.
///
/// Labels must be contiguous (every source up to the maximum present) and
/// every declared simulated source must have at least one row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceLabels {
    labels: Vec<usize>,
    counts: Vec<usize>,
}

impl SourceLabels {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Labels("label vector is empty".into()));
        }
        let m = *labels.iter().max().expect("nonempty");
        let mut counts = vec![0usize; m + 1];
        for &l in &labels {
            counts[l] += 1;
        }
        for (k, &c) in counts.iter().enumerate().skip(1) {
            if c == 0 {
                return Err(Error::Labels(format!(
                    "labels are not contiguous: source {k} has no rows but source {m} exists"
                )));
            }
        }
        Ok(Self { labels, counts })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    /// Number of simulated sources m.
    pub fn num_sources(&self) -> usize {
        self.counts.len() - 1
    }

    /// Count of real rows r.
    pub fn real_count(&self) -> usize {
        self.counts[0]
    }

    /// Count of rows for simulated source k (1-based).
    pub fn source_count(&self, k: usize) -> usize {
        self.counts[k]
    }

    /// Indices of real-labeled rows, in row order.
    pub fn real_indices(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == 0).then_some(i))
            .collect()
    }

    /// Indices of rows from simulated source k.
    pub fn source_indices(&self, k: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == k).then_some(i))
            .collect()
    }
}

/// Diagonal noise-weight matrix `V`: 1 on real rows, `1/gamma_k` on rows of
/// simulated source k. With every `gamma_k = 1` it is exactly the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseWeightMatrix {
    diag: Vec<f64>,
}

impl NoiseWeightMatrix {
    pub fn identity(n: usize) -> Self {
        Self { diag: vec![1.0; n] }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }
}

/// Build `V` from source labels and the trust vector.
pub fn build_v(labels: &SourceLabels, trust: &[f64]) -> Result<NoiseWeightMatrix> {
    if trust.len() != labels.num_sources() {
        return Err(Error::Labels(format!(
            "trust vector length {} does not match {} simulated source(s)",
            trust.len(),
            labels.num_sources()
        )));
    }
    for (k, g) in trust.iter().enumerate() {
        if !(*g > 0.0) || !g.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "trust[{}] must be positive and finite, got {g}",
                k + 1
            )));
        }
    }
    let diag = labels
        .as_slice()
        .iter()
        .map(|&l| if l == 0 { 1.0 } else { 1.0 / trust[l - 1] })
        .collect();
    Ok(NoiseWeightMatrix { diag })
}

/// Fit a joint GP: `C_n = K + sigma_e^2 V`, with `V` from [`build_v`].
pub fn jgp_fit(
    x: &Array2<f64>,
    y: &Array1<f64>,
    labels: &SourceLabels,
    hp: Hyperparameters,
) -> Result<TrainedModel> {
    let v = build_v(labels, &hp.trust)?;
    fit_with_weights(x, y, labels.clone(), hp, &v)
}

/// Predict with a joint GP model. Shares the prediction path of the plain GP;
/// see the module notes for the noise term used in the variance.
pub fn jgp_predict(model: &TrainedModel, xstar: &Array2<f64>) -> Result<Vec<Prediction>> {
    model.predict(xstar)
}
