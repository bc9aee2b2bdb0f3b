//! Experiment protocols: k-fold cross-validation with a simulated-to-real
//! ratio sweep, quantile extrapolation splits, and the toy bias/noise grid.
//!
//! All protocols are deterministic given their plan seed. Repetitions run in
//! parallel; results are collected in plan order so the report is identical
//! regardless of scheduling. Within one (repetition, fold, ratio) cell every
//! method sees the same simulated subsample and, where the protocols align,
//! the same optimizer seed — in particular the joint-GP cell at ratio 0 is
//! bit-identical to the real-only baseline.

use std::time::Instant;

use ndarray::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::gp::{gp_fit, Hyperparameters};
use crate::jgp::{jgp_fit, SourceLabels};
use crate::lsjgp::{lsjgp_fit, lsjgp_predict};
use crate::seed::derive_seed;
use crate::synth::{generate_toy, ToyConfig};
use crate::train::{fit_hyperparameters, FitConfig, ModelKind};

/// Regression methods the harness can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// GP trained on real rows only.
    GpReal,
    /// GP trained on all simulated rows only.
    GpSim,
    /// GP trained on pooled real + simulated rows without labels.
    GpPooled,
    /// Joint GP with per-source trust parameters.
    Jgp,
    /// Least-squares joint GP (mean-only consistency cross-check).
    LsJgp,
}

impl Method {
    /// Report label.
    pub fn label(self) -> &'static str {
        match self {
            Method::GpReal => "GP_r",
            Method::GpSim => "GP_s",
            Method::GpPooled => "GP_r+s",
            Method::Jgp => "JGP",
            Method::LsJgp => "LS-JGP",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gp_r" | "GP_r" => Ok(Method::GpReal),
            "gp_s" | "GP_s" => Ok(Method::GpSim),
            "gp_rs" | "GP_r+s" => Ok(Method::GpPooled),
            "jgp" | "JGP" => Ok(Method::Jgp),
            "ls_jgp" | "LS-JGP" => Ok(Method::LsJgp),
            other => Err(Error::Config(format!(
                "unknown method '{other}'; expected one of gp_r, gp_s, gp_rs, jgp, ls_jgp"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Cross-validation sweep plan.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CvPlan {
    pub folds: usize,
    /// Simulated-to-real ratios; simulated count per cell is
    /// `round(p * real_training_count)`.
    pub ratios: Vec<f64>,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for CvPlan {
    fn default() -> Self {
        Self { folds: 10, ratios: vec![0.0, 0.5, 1.0, 2.0, 4.0], repetitions: 50, seed: 0 }
    }
}

impl CvPlan {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidParameter(format!(
                "cross-validation needs at least 2 folds, got {}",
                self.folds
            )));
        }
        if self.repetitions < 1 {
            return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
        }
        if self.ratios.is_empty() {
            return Err(Error::InvalidParameter("ratio list must be non-empty".into()));
        }
        if self.ratios.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "ratios must be nonnegative and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Quantile extrapolation split: train on rows whose split feature is at or
/// below the quantile, test on the rest.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitPlan {
    /// Column index of the split feature.
    pub feature: usize,
    pub quantile: f64,
    pub seed: u64,
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "split quantile must lie in (0, 1), got {}",
                self.quantile
            )));
        }
        Ok(())
    }
}

/// Toy bias/noise robustness grid.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ToySweepPlan {
    pub biases: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub repetitions: usize,
    pub real_count: usize,
    pub sim_count: usize,
    pub test_count: usize,
    pub seed: u64,
}

impl Default for ToySweepPlan {
    fn default() -> Self {
        Self {
            biases: vec![0.0, 0.5, 1.0, 2.0],
            sigmas: vec![0.1, 0.3, 0.6, 1.2],
            repetitions: 50,
            real_count: 15,
            sim_count: 30,
            test_count: 200,
            seed: 0,
        }
    }
}

impl ToySweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.biases.is_empty() || self.sigmas.is_empty() {
            return Err(Error::InvalidParameter("toy sweep grid must be non-empty".into()));
        }
        if self.repetitions < 1 {
            return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
        }
        if self.real_count < 2 || self.test_count < 1 || self.sim_count < 1 {
            return Err(Error::InvalidParameter(
                "toy sweep needs >= 2 real, >= 1 simulated, >= 1 test points".into(),
            ));
        }
        Ok(())
    }
}

/// Preprocessing applied inside every cell, plus the shared optimizer
/// configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HarnessConfig {
    pub fit: FitConfig,
    /// Per-column z-score from the real training rows of each cell.
    pub standardize: bool,
    /// Subtract the real-training target mean before fitting.
    pub center: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self { fit: FitConfig::default(), standardize: true, center: true }
    }
}

/// One (method, cell) result. Coordinates unused by a protocol are zero.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CellRecord {
    pub method: Method,
    pub repetition: usize,
    pub fold: usize,
    pub p: f64,
    pub bias: f64,
    pub sigma: f64,
    pub rmse: f64,
    pub lengthscale: f64,
    pub noise_std: f64,
    pub trust: Vec<f64>,
    /// Set when the simulated draw needed replacement to reach the
    /// requested count.
    pub with_replacement: bool,
}

/// Full experiment output: one record per (method, cell), plus run metadata.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExperimentReport {
    pub records: Vec<CellRecord>,
    pub standardized: bool,
    pub centered: bool,
    pub wall_time_secs: f64,
}

impl ExperimentReport {
    /// Mean RMSE over all records of a method.
    pub fn mean_rmse(&self, method: Method) -> Option<f64> {
        self.mean_rmse_where(method, |_| true)
    }

    /// Mean RMSE over records of a method passing the filter.
    pub fn mean_rmse_where(
        &self,
        method: Method,
        filter: impl Fn(&CellRecord) -> bool,
    ) -> Option<f64> {
        let vals: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.method == method && filter(r))
            .map(|r| r.rmse)
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }

    /// Standard deviation of RMSE over records of a method passing the filter.
    pub fn std_rmse_where(
        &self,
        method: Method,
        filter: impl Fn(&CellRecord) -> bool,
    ) -> Option<f64> {
        let vals: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.method == method && filter(r))
            .map(|r| r.rmse)
            .collect();
        if vals.is_empty() {
            return None;
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        Some(
            (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64)
                .sqrt(),
        )
    }
}

/// Root mean squared error between predictions and ground truth.
pub fn rmse(predictions: &Array1<f64>, truth: &Array1<f64>) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::InvalidParameter("RMSE of empty input".into()));
    }
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "RMSE prediction/truth lengths".into(),
            expected: truth.len(),
            actual: predictions.len(),
        });
    }
    let n = predictions.len() as f64;
    let sum: f64 = predictions
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((sum / n).sqrt())
}

/// Per-column affine transform fitted on the real training rows of a cell.
pub(crate) struct Standardizer {
    mean: Array1<f64>,
    scale: Array1<f64>,
}

impl Standardizer {
    pub(crate) fn fit(x: &Array2<f64>) -> Self {
        let n = x.nrows() as f64;
        let mean = x.sum_axis(Axis(0)) / n;
        let mut scale = Array1::zeros(x.ncols());
        for j in 0..x.ncols() {
            let col = x.column(j);
            let var = col.iter().map(|v| (v - mean[j]) * (v - mean[j])).sum::<f64>() / n;
            let s = var.sqrt();
            scale[j] = if s > 0.0 { s } else { 1.0 };
        }
        Self { mean, scale }
    }

    pub(crate) fn identity(dim: usize) -> Self {
        Self { mean: Array1::zeros(dim), scale: Array1::ones(dim) }
    }

    pub(crate) fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for j in 0..out.ncols() {
            let (m, s) = (self.mean[j], self.scale[j]);
            out.column_mut(j).mapv_inplace(|v| (v - m) / s);
        }
        out
    }
}

/// Everything one method evaluation needs, already preprocessed.
struct Cell<'a> {
    x_real: &'a Array2<f64>,
    y_real: &'a Array1<f64>,
    x_sim: &'a Array2<f64>,
    y_sim: &'a Array1<f64>,
    /// Contiguous simulated source labels (1..=m), one per sim row.
    sim_labels: &'a [usize],
    x_test: &'a Array2<f64>,
    /// Added back to predictions (target centering offset).
    y_offset: f64,
}

/// Fit one method in a cell and return (hyperparameters, test means).
fn eval_method(
    method: Method,
    cell: &Cell<'_>,
    fit: &FitConfig,
) -> Result<(Hyperparameters, Array1<f64>)> {
    let (x, y, labels, kind) = match method {
        Method::GpReal => (
            cell.x_real.clone(),
            cell.y_real.clone(),
            vec![0; cell.x_real.nrows()],
            ModelKind::Plain,
        ),
        Method::GpSim => (
            cell.x_sim.clone(),
            cell.y_sim.clone(),
            vec![0; cell.x_sim.nrows()],
            ModelKind::Plain,
        ),
        Method::GpPooled => (
            stack_rows(cell.x_real, cell.x_sim),
            stack_vecs(cell.y_real, cell.y_sim),
            vec![0; cell.x_real.nrows() + cell.x_sim.nrows()],
            ModelKind::Plain,
        ),
        Method::Jgp | Method::LsJgp => {
            let mut labels = vec![0usize; cell.x_real.nrows()];
            labels.extend_from_slice(cell.sim_labels);
            (
                stack_rows(cell.x_real, cell.x_sim),
                stack_vecs(cell.y_real, cell.y_sim),
                labels,
                ModelKind::Jgp,
            )
        }
    };
    let sl = SourceLabels::new(labels)?;
    let hp = fit_hyperparameters(&x, &y, &sl, fit, kind)?;
    let means = match method {
        Method::LsJgp => {
            if sl.num_sources() > 1 {
                return Err(Error::Labels(
                    "least-squares joint GP requires a single simulated source".into(),
                ));
            }
            let gamma = hp.trust.first().copied().unwrap_or(1.0);
            let w = lsjgp_fit(
                &x,
                &y,
                sl.as_slice(),
                gamma,
                hp.noise_std * hp.noise_std,
                hp.lengthscale,
            )?;
            lsjgp_predict(&w, &x, cell.x_test)?
        }
        _ => {
            let model = match kind {
                ModelKind::Plain => gp_fit(&x, &y, hp.clone())?,
                ModelKind::Jgp => jgp_fit(&x, &y, &sl, hp.clone())?,
            };
            model.predict_mean(cell.x_test)?
        }
    };
    Ok((hp, means + cell.y_offset))
}

fn stack_rows(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    if b.nrows() == 0 {
        return a.clone();
    }
    ndarray::concatenate(Axis(0), &[a.view(), b.view()]).expect("dims agree")
}

fn stack_vecs(a: &Array1<f64>, b: &Array1<f64>) -> Array1<f64> {
    if b.is_empty() {
        return a.clone();
    }
    ndarray::concatenate(Axis(0), &[a.view(), b.view()]).expect("dims agree")
}

/// Relabel a simulated subset to contiguous sources 1..=m, preserving the
/// distinct-label order of the subset.
fn compress_sim_labels(labels: &[usize]) -> Vec<usize> {
    let mut distinct: Vec<usize> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    labels
        .iter()
        .map(|l| 1 + distinct.binary_search(l).expect("label present"))
        .collect()
}

/// Seeded draw of `count` row indices out of `len`; falls back to drawing
/// with replacement (flagged) when `count > len`.
fn draw_sim_rows(len: usize, count: usize, seed: u64) -> (Vec<usize>, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if count <= len {
        (rand::seq::index::sample(&mut rng, len, count).into_vec(), false)
    } else {
        ((0..count).map(|_| rng.random_range(0..len)).collect(), true)
    }
}

/// Disjoint fold index sets over `n` shuffled rows; sizes differ by at most 1.
fn make_folds(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut pos = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        out.push(idx[pos..pos + size].to_vec());
        pos += size;
    }
    out
}

// Protocol tags mixed into derived seeds so the three experiment types never
// share RNG streams.
const TAG_SHUFFLE: u64 = 1;
const TAG_SIM_DRAW: u64 = 2;
const TAG_FIT: u64 = 3;
const TAG_FIT_SIM: u64 = 4;
const TAG_TOY_REAL: u64 = 5;
const TAG_TOY_TEST: u64 = 6;
const TAG_TOY_SIM: u64 = 7;

/// k-fold cross-validation with a simulated-to-real ratio sweep.
///
/// Within a repetition the real rows are shuffled once and split into folds;
/// for every (fold, ratio) cell each method trains on the same real rows and
/// the same seeded simulated subsample and is scored on the held-out real
/// fold. `GpReal` never sees simulated rows and is computed once per fold;
/// `GpSim` uses all simulated rows regardless of the ratio.
pub fn run_cv_sweep(
    real: &LabeledDataset,
    simulated: &LabeledDataset,
    plan: &CvPlan,
    methods: &[Method],
    config: &HarnessConfig,
) -> Result<ExperimentReport> {
    plan.validate()?;
    config.fit.validate()?;
    if methods.is_empty() {
        return Err(Error::InvalidParameter("method list must be non-empty".into()));
    }
    if real.len() < plan.folds {
        return Err(Error::InvalidParameter(format!(
            "{} real rows cannot form {} folds",
            real.len(),
            plan.folds
        )));
    }
    if real.dim() != simulated.dim() {
        return Err(Error::DimensionMismatch {
            context: "real vs simulated feature dimension".into(),
            expected: real.dim(),
            actual: simulated.dim(),
        });
    }
    let needs_sim = methods.iter().any(|m| *m != Method::GpReal);
    if needs_sim && simulated.is_empty() {
        return Err(Error::Data("simulated dataset is empty".into()));
    }

    let start = Instant::now();
    let per_rep: Vec<Result<Vec<CellRecord>>> = (0..plan.repetitions)
        .into_par_iter()
        .map(|rep| cv_repetition(real, simulated, plan, methods, config, rep))
        .collect();
    let mut records = Vec::new();
    for r in per_rep {
        records.extend(r?);
    }
    Ok(ExperimentReport {
        records,
        standardized: config.standardize,
        centered: config.center,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

fn cv_repetition(
    real: &LabeledDataset,
    simulated: &LabeledDataset,
    plan: &CvPlan,
    methods: &[Method],
    config: &HarnessConfig,
    rep: usize,
) -> Result<Vec<CellRecord>> {
    let folds = make_folds(
        real.len(),
        plan.folds,
        derive_seed(plan.seed, &[TAG_SHUFFLE, rep as u64]),
    );
    let mut records = Vec::new();
    for (fold_idx, test_idx) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(f, _)| *f != fold_idx)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        let train = real.select(&train_idx);
        let test = real.select(test_idx);
        let r_train = train.len();

        let std = if config.standardize {
            Standardizer::fit(&train.x)
        } else {
            Standardizer::identity(train.dim())
        };
        let y_offset = if config.center { train.y.sum() / r_train as f64 } else { 0.0 };
        let x_real = std.apply(&train.x);
        let y_real = &train.y - y_offset;
        let x_test = std.apply(&test.x);

        // GP_r ignores the ratio sweep; evaluate once per fold with the
        // ratio-0 seed so a ratio-0 joint-GP cell is bit-identical.
        let mut gp_r: Option<(Hyperparameters, f64)> = None;
        let mut gp_s: Option<(Hyperparameters, f64)> = None;

        for (p_idx, &p) in plan.ratios.iter().enumerate() {
            let want = (p * r_train as f64).round() as usize;
            let (sim_rows, with_replacement) = draw_sim_rows(
                simulated.len().max(1),
                want,
                derive_seed(plan.seed, &[TAG_SIM_DRAW, rep as u64, fold_idx as u64, p_idx as u64]),
            );
            let sim = simulated.select(&sim_rows);
            let x_sim = std.apply(&sim.x);
            let y_sim = &sim.y - y_offset;
            let sim_labels = compress_sim_labels(&sim.labels);
            let fit = config.fit.clone().with_seed(derive_seed(
                plan.seed,
                &[TAG_FIT, rep as u64, fold_idx as u64, p_idx as u64],
            ));

            for &method in methods {
                let cell = Cell {
                    x_real: &x_real,
                    y_real: &y_real,
                    x_sim: &x_sim,
                    y_sim: &y_sim,
                    sim_labels: &sim_labels,
                    x_test: &x_test,
                    y_offset,
                };
                let (hp, score) = match method {
                    Method::GpReal => {
                        if gp_r.is_none() {
                            let fit0 = config.fit.clone().with_seed(derive_seed(
                                plan.seed,
                                &[TAG_FIT, rep as u64, fold_idx as u64, 0],
                            ));
                            let (hp, means) = eval_method(Method::GpReal, &cell, &fit0)?;
                            gp_r = Some((hp, rmse(&means, &test.y)?));
                        }
                        gp_r.clone().unwrap()
                    }
                    Method::GpSim => {
                        if gp_s.is_none() {
                            // All simulated rows, regardless of the ratio.
                            let x_all = std.apply(&simulated.x);
                            let y_all = &simulated.y - y_offset;
                            let all_cell = Cell {
                                x_sim: &x_all,
                                y_sim: &y_all,
                                ..cell
                            };
                            let fit_s = config.fit.clone().with_seed(derive_seed(
                                plan.seed,
                                &[TAG_FIT_SIM, rep as u64, fold_idx as u64],
                            ));
                            let (hp, means) = eval_method(Method::GpSim, &all_cell, &fit_s)?;
                            gp_s = Some((hp, rmse(&means, &test.y)?));
                        }
                        gp_s.clone().unwrap()
                    }
                    _ => {
                        let (hp, means) = eval_method(method, &cell, &fit)?;
                        (hp, rmse(&means, &test.y)?)
                    }
                };
                records.push(CellRecord {
                    method,
                    repetition: rep,
                    fold: fold_idx,
                    p,
                    bias: 0.0,
                    sigma: 0.0,
                    rmse: score,
                    lengthscale: hp.lengthscale,
                    noise_std: hp.noise_std,
                    trust: hp.trust.clone(),
                    with_replacement: with_replacement && method != Method::GpReal
                        && method != Method::GpSim,
                });
            }
        }
    }
    Ok(records)
}

/// Quantile extrapolation: train on real rows at or below the split-feature
/// quantile, test on the rest. Joint and pooled methods get a ratio-1
/// simulated draw; `GpSim` uses all simulated rows.
pub fn run_extrapolation(
    real: &LabeledDataset,
    simulated: &LabeledDataset,
    plan: &SplitPlan,
    methods: &[Method],
    config: &HarnessConfig,
) -> Result<ExperimentReport> {
    plan.validate()?;
    config.fit.validate()?;
    if plan.feature >= real.dim() {
        return Err(Error::Config(format!(
            "split feature index {} out of range for {} features",
            plan.feature,
            real.dim()
        )));
    }
    let col: Vec<f64> = real.x.column(plan.feature).to_vec();
    let mut sorted = col.clone();
    sorted.sort_by(f64::total_cmp);
    let threshold = sorted[((plan.quantile * (sorted.len() - 1) as f64).round() as usize)
        .min(sorted.len() - 1)];
    let train_idx: Vec<usize> = (0..real.len()).filter(|&i| col[i] <= threshold).collect();
    let test_idx: Vec<usize> = (0..real.len()).filter(|&i| col[i] > threshold).collect();
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::Data(format!(
            "degenerate split at quantile {}: {} train rows, {} test rows",
            plan.quantile,
            train_idx.len(),
            test_idx.len()
        )));
    }

    let start = Instant::now();
    let train = real.select(&train_idx);
    let test = real.select(&test_idx);
    let std = if config.standardize {
        Standardizer::fit(&train.x)
    } else {
        Standardizer::identity(train.dim())
    };
    let y_offset = if config.center { train.y.sum() / train.len() as f64 } else { 0.0 };
    let x_real = std.apply(&train.x);
    let y_real = &train.y - y_offset;
    let x_test = std.apply(&test.x);

    let needs_sim = methods.iter().any(|m| *m != Method::GpReal);
    if needs_sim && simulated.is_empty() {
        return Err(Error::Data("simulated dataset is empty".into()));
    }
    let (sim_rows, with_replacement) = draw_sim_rows(
        simulated.len().max(1),
        train.len(),
        derive_seed(plan.seed, &[TAG_SIM_DRAW]),
    );
    let sim = simulated.select(&sim_rows);
    let x_sim = std.apply(&sim.x);
    let y_sim = &sim.y - y_offset;
    let sim_labels = compress_sim_labels(&sim.labels);

    let mut records = Vec::new();
    for &method in methods {
        let (x_s, y_s);
        let cell = if method == Method::GpSim {
            x_s = std.apply(&simulated.x);
            y_s = &simulated.y - y_offset;
            Cell {
                x_real: &x_real,
                y_real: &y_real,
                x_sim: &x_s,
                y_sim: &y_s,
                sim_labels: &sim_labels,
                x_test: &x_test,
                y_offset,
            }
        } else {
            Cell {
                x_real: &x_real,
                y_real: &y_real,
                x_sim: &x_sim,
                y_sim: &y_sim,
                sim_labels: &sim_labels,
                x_test: &x_test,
                y_offset,
            }
        };
        let fit = config.fit.clone().with_seed(derive_seed(plan.seed, &[TAG_FIT]));
        let (hp, means) = eval_method(method, &cell, &fit)?;
        records.push(CellRecord {
            method,
            repetition: 0,
            fold: 0,
            p: 1.0,
            bias: 0.0,
            sigma: 0.0,
            rmse: rmse(&means, &test.y)?,
            lengthscale: hp.lengthscale,
            noise_std: hp.noise_std,
            trust: hp.trust.clone(),
            with_replacement: with_replacement && method != Method::GpReal
                && method != Method::GpSim,
        });
    }
    Ok(ExperimentReport {
        records,
        standardized: config.standardize,
        centered: config.center,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// Bias/noise robustness sweep on the damped-sine toy problem.
///
/// For each repetition one real and one test draw are shared across the
/// grid; each (bias, sigma) grid point gets its own simulated draw. Test
/// points cover [-1, 1] with the real-data noise level and no bias.
pub fn run_toy_sweep(
    plan: &ToySweepPlan,
    methods: &[Method],
    config: &HarnessConfig,
) -> Result<ExperimentReport> {
    plan.validate()?;
    config.fit.validate()?;
    if methods.is_empty() {
        return Err(Error::InvalidParameter("method list must be non-empty".into()));
    }

    let start = Instant::now();
    let per_rep: Vec<Result<Vec<CellRecord>>> = (0..plan.repetitions)
        .into_par_iter()
        .map(|rep| toy_repetition(plan, methods, config, rep))
        .collect();
    let mut records = Vec::new();
    for r in per_rep {
        records.extend(r?);
    }
    Ok(ExperimentReport {
        records,
        standardized: config.standardize,
        centered: config.center,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

fn toy_repetition(
    plan: &ToySweepPlan,
    methods: &[Method],
    config: &HarnessConfig,
    rep: usize,
) -> Result<Vec<CellRecord>> {
    let real = generate_toy(&ToyConfig::real_default(
        plan.real_count,
        derive_seed(plan.seed, &[TAG_TOY_REAL, rep as u64]),
    ))?;
    let test = generate_toy(&ToyConfig {
        bias: 0.0,
        noise_std: 0.3,
        range: (-1.0, 1.0),
        count: plan.test_count,
        seed: derive_seed(plan.seed, &[TAG_TOY_TEST, rep as u64]),
    })?;

    let std = if config.standardize {
        Standardizer::fit(&real.x)
    } else {
        Standardizer::identity(real.dim())
    };
    let y_offset = if config.center { real.y.sum() / real.len() as f64 } else { 0.0 };
    let x_real = std.apply(&real.x);
    let y_real = &real.y - y_offset;
    let x_test = std.apply(&test.x);

    // GP_r sees no simulated data: one evaluation per repetition, reused at
    // every grid point.
    let mut gp_r: Option<(Hyperparameters, f64)> = None;
    let empty_x = Array2::zeros((0, real.dim()));
    let empty_y = Array1::zeros(0);

    let mut records = Vec::new();
    for (bi, &bias) in plan.biases.iter().enumerate() {
        for (si, &sigma) in plan.sigmas.iter().enumerate() {
            let sim = generate_toy(&ToyConfig::sim_default(
                bias,
                sigma,
                plan.sim_count,
                derive_seed(plan.seed, &[TAG_TOY_SIM, rep as u64, bi as u64, si as u64]),
            ))?;
            let x_sim = std.apply(&sim.x);
            let y_sim = &sim.y - y_offset;
            let sim_labels = vec![1usize; sim.len()];
            let fit = config.fit.clone().with_seed(derive_seed(
                plan.seed,
                &[TAG_FIT, rep as u64, bi as u64, si as u64],
            ));
            for &method in methods {
                let (hp, score) = if method == Method::GpReal {
                    if gp_r.is_none() {
                        let cell = Cell {
                            x_real: &x_real,
                            y_real: &y_real,
                            x_sim: &empty_x,
                            y_sim: &empty_y,
                            sim_labels: &[],
                            x_test: &x_test,
                            y_offset,
                        };
                        let fit_r = config.fit.clone().with_seed(derive_seed(
                            plan.seed,
                            &[TAG_FIT, rep as u64],
                        ));
                        let (hp, means) = eval_method(Method::GpReal, &cell, &fit_r)?;
                        gp_r = Some((hp, rmse(&means, &test.y)?));
                    }
                    gp_r.clone().unwrap()
                } else {
                    let cell = Cell {
                        x_real: &x_real,
                        y_real: &y_real,
                        x_sim: &x_sim,
                        y_sim: &y_sim,
                        sim_labels: &sim_labels,
                        x_test: &x_test,
                        y_offset,
                    };
                    let (hp, means) = eval_method(method, &cell, &fit)?;
                    (hp, rmse(&means, &test.y)?)
                };
                records.push(CellRecord {
                    method,
                    repetition: rep,
                    fold: 0,
                    p: 0.0,
                    bias,
                    sigma,
                    rmse: score,
                    lengthscale: hp.lengthscale,
                    noise_std: hp.noise_std,
                    trust: hp.trust.clone(),
                    with_replacement: false,
                });
            }
        }
    }
    Ok(records)
}
