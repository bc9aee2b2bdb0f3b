//! Joint Gaussian-process (JGP) regression over mixed real and simulated
//! data.
//!
//! A joint GP is a GP whose noise covariance `C_n = K + sigma_e^2 V`
//! distinguishes data sources: `V` is diagonal with weight 1 on real rows
//! and `1/gamma_k` on rows from simulated source `k`. The trust parameter
//! `gamma_k` is fitted together with the kernel hyperparameters by
//! maximizing a leave-one-out pseudo-likelihood restricted to the real rows,
//! so unhelpful simulated sources are automatically down-weighted
//! (`gamma -> 0`) while informative ones extend the model beyond the real
//! data's coverage.
//!
//! Predictions target the *real* distribution: the predictive variance adds
//! the real-data noise `sigma_e^2` (never `sigma_e^2 / gamma`), and the
//! noise-free latent variance is reported alongside.
//!
//! The crate also ships the plain-GP baselines (real-only, simulated-only,
//! pooled), a least-squares dual formulation used as an independent
//! consistency check on the JGP mean, synthetic data generators, and an
//! experiment harness (cross-validation ratio sweeps, extrapolation splits,
//! toy robustness grids) behind the `jgp` binary.

pub mod cli;
pub mod data;
pub mod error;
pub mod gp;
pub mod harness;
pub mod jgp;
pub mod kernel;
pub mod lsjgp;
mod optim;
pub mod seed;
pub mod synth;
pub mod train;

pub use data::LabeledDataset;
pub use error::{Error, Result};
pub use gp::{gp_fit, gp_predict, Hyperparameters, Prediction, TrainedModel};
pub use harness::{
    rmse, run_cv_sweep, run_extrapolation, run_toy_sweep, CvPlan, ExperimentReport, Method,
    SplitPlan, ToySweepPlan,
};
pub use jgp::{build_v, jgp_fit, jgp_predict, NoiseWeightMatrix, SourceLabels};
pub use lsjgp::{lsjgp_fit, lsjgp_predict, RidgeWeights};
pub use synth::{damped_sine, generate_toy, ToyConfig};
pub use train::{
    fit_hyperparameters, loo_terms, pseudo_log_likelihood, FitConfig, LooTerms, ModelKind,
    SearchBounds,
};
