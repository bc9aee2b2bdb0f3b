//! Hyperparameter fitting by maximizing the leave-one-out (LOO)
//! pseudo-likelihood restricted to real data points, evaluated with the
//! single-inverse identities
//!
//! ```text
//! mu_i = y_i - [C_n^-1 y]_i / [C_n^-1]_ii,   sigma_i^2 = 1 / [C_n^-1]_ii
//! ```
//!
//! so only one factorization of the full covariance is needed per objective
//! evaluation. Two implementation notes that are deliberate and must not be
//! "fixed":
//!
//! * The identities use the full noisy covariance `C_n = K + sigma_e^2 V`,
//!   not the bare kernel matrix: with the bare `K` the noise model (and the
//!   trust parameters through `V`) could never influence the objective.
//! * The per-point log density carries the standard 1/2 factor on the
//!   quadratic term, `-(y_i - mu_i)^2 / (2 sigma_i^2)`; dropping it would
//!   miscalibrate the fitted noise.
//!
//! For a joint GP the sum runs over real-labeled rows only; plain-GP
//! baselines maximize the same objective over all of their training rows.

use ndarray::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gp::{Hyperparameters, TrainedModel};
use crate::jgp::SourceLabels;
use crate::kernel;
use crate::optim::NelderMead;
use crate::seed::derive_seed;

/// Per-point LOO predictive terms for the real subset of a fitted model.
#[derive(Debug, Clone)]
pub struct LooTerms {
    /// Row indices the terms refer to (the real-labeled rows).
    pub indices: Vec<usize>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

/// Search-space bounds per hyperparameter, in natural units.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SearchBounds {
    pub lengthscale: (f64, f64),
    pub noise_std: (f64, f64),
    pub trust: (f64, f64),
}

impl Default for SearchBounds {
    fn default() -> Self {
        // The trust range must reach far below 1 (sources can be ignored)
        // and above 1 (simulated data can be trusted more than real).
        Self {
            lengthscale: (1e-3, 1e3),
            noise_std: (1e-4, 1e2),
            trust: (1e-6, 1e3),
        }
    }
}

/// Optimizer configuration for [`fit_hyperparameters`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FitConfig {
    /// Max objective evaluations per restart.
    pub budget: usize,
    /// Number of independent starts; the first uses data-driven heuristics,
    /// the rest are log-uniform in the bounds.
    pub restarts: usize,
    pub bounds: SearchBounds,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { budget: 500, restarts: 5, bounds: SearchBounds::default(), seed: 0 }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget < 1 {
            return Err(Error::InvalidParameter("optimizer budget must be >= 1".into()));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        for (name, (lo, hi)) in [
            ("lengthscale", self.bounds.lengthscale),
            ("noise_std", self.bounds.noise_std),
            ("trust", self.bounds.trust),
        ] {
            if !(lo > 0.0 && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParameter(format!(
                    "{name} bounds must be finite with 0 < lower < upper, got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Which objective restriction to use when fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Plain GP: no source structure, LOO sum over every training row.
    Plain,
    /// Joint GP: trust parameter per simulated source, LOO sum over real rows.
    Jgp,
}

/// LOO predictive mean and variance for each real-labeled row of a fitted
/// model, from a single factorization.
pub fn loo_terms(model: &TrainedModel) -> Result<LooTerms> {
    let indices = model.labels().real_indices();
    if indices.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "leave-one-out terms need at least 2 real points, got {}; \
             provide more real-labeled rows",
            indices.len()
        )));
    }
    let inv_diag = model.factor().inverse_diag();
    let alpha = model.alpha();
    let y = model.targets();
    let mut means = Vec::with_capacity(indices.len());
    let mut variances = Vec::with_capacity(indices.len());
    for &i in &indices {
        let d = inv_diag[i];
        if !(d > 0.0) {
            return Err(Error::Numerical(format!(
                "[C^-1]_ii = {d:.6e} is not positive at index {i}"
            )));
        }
        means.push(y[i] - alpha[i] / d);
        variances.push(1.0 / d);
    }
    Ok(LooTerms { indices, means, variances })
}

/// LOO pseudo-log-likelihood of the real rows:
/// `sum_i [ -0.5 log(2 pi sigma_i^2) - (y_i - mu_i)^2 / (2 sigma_i^2) ]`.
pub fn pseudo_log_likelihood(model: &TrainedModel) -> Result<f64> {
    let terms = loo_terms(model)?;
    let y = model.targets();
    let mut ll = 0.0;
    for ((&i, &mu), &var) in terms
        .indices
        .iter()
        .zip(&terms.means)
        .zip(&terms.variances)
    {
        let resid = y[i] - mu;
        ll += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - resid * resid / (2.0 * var);
    }
    Ok(ll)
}

struct Objective<'a> {
    sq_dists: Array2<f64>,
    y: &'a Array1<f64>,
    /// Noise-weight exponents: row label (0 real, k simulated).
    labels: Vec<usize>,
    /// Rows the LOO sum runs over.
    loo_rows: Vec<usize>,
}

impl Objective<'_> {
    /// Pseudo-log-likelihood at log-parameters `theta`; errors become None.
    fn eval(&self, theta: &[f64]) -> Option<f64> {
        let lengthscale = theta[0].exp();
        let noise_var = (2.0 * theta[1]).exp();
        let trust: Vec<f64> = theta[2..].iter().map(|t| t.exp()).collect();
        let mut c = kernel::kernel_from_sq_dists(&self.sq_dists, lengthscale).ok()?;
        for (i, &l) in self.labels.iter().enumerate() {
            let w = if l == 0 { 1.0 } else { 1.0 / trust[l - 1] };
            c[[i, i]] += noise_var * w;
        }
        let factor = kernel::factorize(&c).ok()?;
        let alpha = factor.solve_vec(self.y.view()).ok()?;
        let inv_diag = factor.inverse_diag();
        let mut ll = 0.0;
        for &i in &self.loo_rows {
            let d = inv_diag[i];
            if !(d > 0.0) {
                return None;
            }
            // Residual y_i - mu_i = alpha_i / [C^-1]_ii, same terms as
            // loo_terms/pseudo_log_likelihood.
            let var = 1.0 / d;
            let r = alpha[i] * var;
            ll += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - r * r / (2.0 * var);
        }
        ll.is_finite().then_some(ll)
    }
}

/// Maximize the restricted LOO pseudo-likelihood over hyperparameters with a
/// multi-started Nelder-Mead search in log-parameter space.
///
/// Deterministic given `config.seed`. The best objective across restarts
/// wins; exact ties keep the lowest restart index.
pub fn fit_hyperparameters(
    x: &Array2<f64>,
    y: &Array1<f64>,
    labels: &SourceLabels,
    config: &FitConfig,
    kind: ModelKind,
) -> Result<Hyperparameters> {
    config.validate()?;
    let n = x.nrows();
    if y.len() != n || labels.len() != n {
        return Err(Error::DimensionMismatch {
            context: "fit_hyperparameters targets/labels".into(),
            expected: n,
            actual: if y.len() != n { y.len() } else { labels.len() },
        });
    }
    let (row_labels, loo_rows, num_sources) = match kind {
        ModelKind::Plain => (vec![0usize; n], (0..n).collect::<Vec<_>>(), 0),
        ModelKind::Jgp => (
            labels.as_slice().to_vec(),
            labels.real_indices(),
            labels.num_sources(),
        ),
    };
    if loo_rows.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "restricted LOO fitting needs at least 2 real points, got {}",
            loo_rows.len()
        )));
    }

    let dim = 2 + num_sources;
    let lb: Vec<f64> = std::iter::once(config.bounds.lengthscale.0.ln())
        .chain(std::iter::once(config.bounds.noise_std.0.ln()))
        .chain(std::iter::repeat_n(config.bounds.trust.0.ln(), num_sources))
        .collect();
    let ub: Vec<f64> = std::iter::once(config.bounds.lengthscale.1.ln())
        .chain(std::iter::once(config.bounds.noise_std.1.ln()))
        .chain(std::iter::repeat_n(config.bounds.trust.1.ln(), num_sources))
        .collect();

    let objective = Objective {
        sq_dists: kernel::pairwise_sq_dists(x),
        y,
        labels: row_labels,
        loo_rows: loo_rows.clone(),
    };

    // First start: median pairwise distance, 10% of the real-target spread,
    // unit trust. Remaining starts are log-uniform in windows around those
    // heuristics — the raw bounds span many decades of scales the data
    // cannot support, and starts out there waste the evaluation budget.
    let mut start0 = vec![0.0; dim];
    start0[0] = median_pairwise_distance(&objective.sq_dists).ln();
    start0[1] = initial_noise_std(y, &loo_rows).ln();
    let mut half_width = vec![16f64.ln(), 10f64.ln()];
    half_width.extend(std::iter::repeat_n(5.0, num_sources));
    let clamp = |theta: &[f64]| -> Vec<f64> {
        theta
            .iter()
            .enumerate()
            .map(|(i, &t)| t.clamp(lb[i], ub[i]))
            .collect()
    };
    let start0 = clamp(&start0);

    let mut best: Option<(f64, Vec<f64>)> = None;
    for restart in 0..config.restarts {
        let x0 = if restart == 0 {
            start0.clone()
        } else {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[restart as u64]));
            (0..dim)
                .map(|i| {
                    let lo = (start0[i] - half_width[i]).max(lb[i]);
                    let hi = (start0[i] + half_width[i]).min(ub[i]);
                    rng.random_range(lo..hi)
                })
                .collect()
        };
        let mut restart_best: Option<(f64, Vec<f64>)> = None;
        let mut penalized = |theta: &[f64]| -> f64 {
            let tc = clamp(theta);
            match objective.eval(&tc) {
                Some(ll) => {
                    if restart_best.as_ref().is_none_or(|(b, _)| ll > *b) {
                        restart_best = Some((ll, tc.clone()));
                    }
                    let penalty: f64 = theta
                        .iter()
                        .zip(&tc)
                        .map(|(t, c)| {
                            let e = t - c;
                            100.0 * e * e
                        })
                        .sum();
                    -ll + penalty
                }
                None => f64::INFINITY,
            }
        };
        let nm = NelderMead { max_evals: config.budget, ftol: 1e-9, init_step: 0.5 };
        let r = nm.minimize(&mut penalized, &x0);
        log::debug!(
            "restart {restart}: {} evals, best penalized objective {:.6e} at {:?}",
            r.evals,
            r.best_f,
            r.best_x
        );
        if let Some((ll, theta)) = restart_best {
            if best.as_ref().is_none_or(|(b, _)| ll > *b) {
                best = Some((ll, theta));
            }
        }
    }

    match best {
        Some((_, theta)) => Hyperparameters::new(
            theta[0].exp(),
            theta[1].exp(),
            theta[2..].iter().map(|t| t.exp()).collect(),
        ),
        None => Err(Error::Numerical(
            "all optimizer starts failed covariance factorization".into(),
        )),
    }
}

fn median_pairwise_distance(sq_dists: &Array2<f64>) -> f64 {
    let n = sq_dists.nrows();
    let mut dists: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = sq_dists[[i, j]];
            if d > 0.0 {
                dists.push(d.sqrt());
            }
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    dists[dists.len() / 2]
}

fn initial_noise_std(y: &Array1<f64>, real_rows: &[usize]) -> f64 {
    let vals: Vec<f64> = real_rows.iter().map(|&i| y[i]).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let s = 0.1 * var.sqrt();
    if s.is_finite() && s > 0.0 {
        s
    } else {
        0.1
    }
}
