//! Data ingestion, run configuration, and the command implementations
//! behind the `jgp` binary. All commands are deterministic given the config
//! seed and write their results once, at the end, from a single writer.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::prelude::*;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::gp::{gp_fit, Hyperparameters, TrainedModel};
use crate::harness::{
    run_cv_sweep, run_extrapolation, run_toy_sweep, CvPlan, ExperimentReport, HarnessConfig,
    Method, SplitPlan, Standardizer, ToySweepPlan,
};
use crate::jgp::{jgp_fit, SourceLabels};
use crate::train::{pseudo_log_likelihood, fit_hyperparameters, FitConfig, ModelKind};

/// Read a dataset CSV: a header row, any number of feature columns, one
/// `target` column, and an optional integer `source` column (0 = real,
/// k >= 1 = simulated source k; defaults to 0 when absent). Row order is
/// preserved.
pub fn ingest(path: &Path) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() {
        return Err(Error::Data(format!("{}: empty file", path.display())));
    }
    let target_col = headers
        .iter()
        .position(|h| h == "target")
        .ok_or_else(|| Error::Data(format!("{}: missing 'target' column", path.display())))?;
    let source_col = headers.iter().position(|h| h == "source");
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&i| i != target_col && Some(i) != source_col)
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::Data(format!("{}: no feature columns", path.display())));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    // Rows are numbered by data record, starting at 1 below the header.
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| {
            Error::Data(format!("{}: row {row}: {e}", path.display()))
        })?;
        if record.len() != headers.len() {
            return Err(Error::Data(format!(
                "{}: row {row}: expected {} cells, found {}",
                path.display(),
                headers.len(),
                record.len()
            )));
        }
        let cell = |col: usize| -> Result<f64> {
            let raw = record.get(col).unwrap_or("").trim();
            if raw.is_empty() {
                return Err(Error::Data(format!(
                    "{}: row {row}, column '{}': missing value",
                    path.display(),
                    headers[col]
                )));
            }
            let v: f64 = raw.parse().map_err(|_| {
                Error::Data(format!(
                    "{}: row {row}, column '{}': not a number",
                    path.display(),
                    headers[col]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "{}: row {row}, column '{}': non-finite value",
                    path.display(),
                    headers[col]
                )));
            }
            Ok(v)
        };
        rows.push(feature_cols.iter().map(|&c| cell(c)).collect::<Result<_>>()?);
        targets.push(cell(target_col)?);
        labels.push(match source_col {
            Some(c) => {
                let raw = record.get(c).unwrap_or("").trim();
                raw.parse::<usize>().map_err(|_| {
                    Error::Data(format!(
                        "{}: row {row}, column 'source': not a nonnegative integer",
                        path.display()
                    ))
                })?
            }
            None => 0,
        });
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }

    let d = feature_cols.len();
    let x = Array2::from_shape_vec((rows.len(), d), rows.concat())
        .expect("row lengths checked");
    let names = feature_cols.iter().map(|&c| headers[c].clone()).collect();
    let ds = LabeledDataset::new(x, Array1::from_vec(targets), labels, names)?;
    let real = ds.labels.iter().filter(|&&l| l == 0).count();
    log::info!(
        "{}: {} rows, {} features, {} real / {} simulated",
        path.display(),
        ds.len(),
        ds.dim(),
        real,
        ds.len() - real
    );
    Ok(ds)
}

/// JSON run configuration. Unknown keys are rejected; every field has a
/// default so minimal configs stay small.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub methods: Vec<String>,
    pub real: Option<PathBuf>,
    pub simulated: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub folds: usize,
    pub ratios: Vec<f64>,
    pub repetitions: usize,
    pub quantile: f64,
    pub split_feature: usize,
    pub biases: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub toy_real_count: usize,
    pub toy_sim_count: usize,
    pub toy_test_count: usize,
    pub fit: FitConfig,
    pub standardize: bool,
    pub center: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            methods: vec!["gp_r".into(), "gp_rs".into(), "jgp".into()],
            real: None,
            simulated: None,
            test: None,
            folds: 10,
            ratios: vec![0.0, 0.5, 1.0, 2.0, 4.0],
            repetitions: 50,
            quantile: 0.5,
            split_feature: 1,
            biases: vec![0.0, 0.5, 1.0, 2.0],
            sigmas: vec![0.1, 0.3, 0.6, 1.2],
            toy_real_count: 15,
            toy_sim_count: 30,
            toy_test_count: 200,
            fit: FitConfig::default(),
            standardize: true,
            center: true,
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Parse a config file, apply an optional seed override, and validate.
    /// Validation reports every violation, not just the first.
    pub fn load(path: Option<&Path>, seed_override: Option<u64>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let raw = fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str::<RunConfig>(&raw)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = seed_override {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut violations: Vec<String> = Vec::new();
        if self.methods.is_empty() {
            violations.push("method list is empty".into());
        }
        for m in &self.methods {
            if let Err(e) = Method::parse(m) {
                violations.push(e.to_string());
            }
        }
        if self.folds < 2 {
            violations.push(format!("folds must be >= 2, got {}", self.folds));
        }
        if self.repetitions < 1 {
            violations.push("repetitions must be >= 1".into());
        }
        if self.ratios.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            violations.push("ratios must be nonnegative and finite".into());
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            violations.push(format!("quantile must lie in (0, 1), got {}", self.quantile));
        }
        if let Err(e) = self.fit.validate() {
            violations.push(e.to_string());
        }
        for (name, p) in [("real", &self.real), ("simulated", &self.simulated), ("test", &self.test)] {
            if let Some(p) = p {
                if !p.exists() {
                    violations.push(format!("{name} dataset path does not exist: {}", p.display()));
                }
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(violations.join("; ")))
        }
    }

    pub fn parsed_methods(&self) -> Result<Vec<Method>> {
        self.methods.iter().map(|m| Method::parse(m)).collect()
    }

    fn harness_config(&self) -> HarnessConfig {
        HarnessConfig {
            fit: self.fit.clone(),
            standardize: self.standardize,
            center: self.center,
        }
    }

    fn require(&self, field: &str, value: &Option<PathBuf>) -> Result<PathBuf> {
        value
            .clone()
            .ok_or_else(|| Error::Config(format!("this command requires a '{field}' dataset path")))
    }
}

/// FNV-1a hash of the effective (post-override) configuration.
pub fn config_hash(cfg: &RunConfig) -> u64 {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn provenance_line(cfg: &RunConfig) -> String {
    format!(
        "# config_hash={:016x} seed={} version={}",
        config_hash(cfg),
        cfg.seed,
        env!("CARGO_PKG_VERSION")
    )
}

fn write_output(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn fmt_trust(trust: &[f64]) -> String {
    trust.iter().map(|g| format!("{g:.17e}")).collect::<Vec<_>>().join(";")
}

/// Fitted-model summary persisted by `fit` and consumed by `predict`.
/// Models are stored as hyperparameters plus data references; `predict`
/// rebuilds the model deterministically from the same datasets.
#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct ModelSummary {
    pub method: String,
    pub hyperparameters: Hyperparameters,
    pub pseudo_log_likelihood: f64,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

struct Assembled {
    x: Array2<f64>,
    y: Array1<f64>,
    labels: SourceLabels,
    kind: ModelKind,
    standardizer: Standardizer,
    y_offset: f64,
}

/// Build the training arrays for one method from the configured datasets,
/// applying standardization/centering derived from the real rows.
fn assemble(cfg: &RunConfig, method: Method) -> Result<Assembled> {
    let real = ingest(&cfg.require("real", &cfg.real)?)?;
    let needs_sim = method != Method::GpReal;
    let simulated = match (&cfg.simulated, needs_sim) {
        (Some(p), _) => Some(ingest(p)?),
        (None, true) => return Err(Error::Config("this method requires a 'simulated' dataset path".into())),
        (None, false) => None,
    };
    if let Some(sim) = &simulated {
        if sim.dim() != real.dim() {
            return Err(Error::DimensionMismatch {
                context: "real vs simulated feature dimension".into(),
                expected: real.dim(),
                actual: sim.dim(),
            });
        }
    }

    let standardizer = if cfg.standardize {
        Standardizer::fit(&real.x)
    } else {
        Standardizer::identity(real.dim())
    };
    let y_offset = if cfg.center { real.y.sum() / real.len() as f64 } else { 0.0 };

    let (x, y, labels, kind) = match method {
        Method::GpReal => (
            standardizer.apply(&real.x),
            &real.y - y_offset,
            vec![0; real.len()],
            ModelKind::Plain,
        ),
        Method::GpSim => {
            let sim = simulated.as_ref().expect("checked above");
            (
                standardizer.apply(&sim.x),
                &sim.y - y_offset,
                vec![0; sim.len()],
                ModelKind::Plain,
            )
        }
        Method::GpPooled => {
            let sim = simulated.as_ref().expect("checked above");
            let pooled = real.concat(sim)?;
            (
                standardizer.apply(&pooled.x),
                &pooled.y - y_offset,
                vec![0; pooled.len()],
                ModelKind::Plain,
            )
        }
        Method::Jgp => {
            let sim = simulated.as_ref().expect("checked above");
            // Simulated labels become contiguous sources 1..=m regardless
            // of how they were numbered in the file.
            let mut distinct: Vec<usize> = sim.labels.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let mut labels = vec![0usize; real.len()];
            labels.extend(
                sim.labels
                    .iter()
                    .map(|l| 1 + distinct.binary_search(l).expect("label present")),
            );
            let pooled = real.concat(sim)?;
            (
                standardizer.apply(&pooled.x),
                &pooled.y - y_offset,
                labels,
                ModelKind::Jgp,
            )
        }
        Method::LsJgp => {
            return Err(Error::Config(
                "ls_jgp is a mean-only cross-check; use it with cv-sweep, extrapolate, or toy-sweep".into(),
            ))
        }
    };
    Ok(Assembled {
        x,
        y,
        labels: SourceLabels::new(labels)?,
        kind,
        standardizer,
        y_offset,
    })
}

fn build_model(a: &Assembled, hp: Hyperparameters) -> Result<TrainedModel> {
    match a.kind {
        ModelKind::Plain => gp_fit(&a.x, &a.y, hp),
        ModelKind::Jgp => jgp_fit(&a.x, &a.y, &a.labels, hp),
    }
}

fn single_method(cfg: &RunConfig) -> Result<Method> {
    let methods = cfg.parsed_methods()?;
    match methods.as_slice() {
        [m] => Ok(*m),
        _ => Err(Error::Config(format!(
            "this command fits exactly one method; config lists {}",
            methods.len()
        ))),
    }
}

/// `fit`: optimize hyperparameters for one method and write a JSON model
/// summary.
pub fn cmd_fit(cfg: &RunConfig, out: &Path) -> Result<()> {
    let method = single_method(cfg)?;
    let a = assemble(cfg, method)?;
    let fit = cfg.fit.clone().with_seed(cfg.seed);
    let hp = fit_hyperparameters(&a.x, &a.y, &a.labels, &fit, a.kind)?;
    let model = build_model(&a, hp.clone())?;
    let summary = ModelSummary {
        method: cfg.methods[0].clone(),
        hyperparameters: hp,
        pseudo_log_likelihood: pseudo_log_likelihood(&model)?,
        config_hash: format!("{:016x}", config_hash(cfg)),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").into(),
    };
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Io(std::io::Error::other(format!("serializing model summary: {e}"))))?;
    write_output(out, &json)
}

/// `predict`: rebuild the model from a summary and the configured datasets,
/// then predict a test CSV, writing mean and variance per row.
pub fn cmd_predict(cfg: &RunConfig, model_path: &Path, out: &Path) -> Result<()> {
    let raw = fs::read_to_string(model_path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", model_path.display())))
    })?;
    let summary: ModelSummary = serde_json::from_str(&raw)
        .map_err(|e| Error::Config(format!("{}: {e}", model_path.display())))?;
    let method = Method::parse(&summary.method)?;
    let a = assemble(cfg, method)?;
    let model = build_model(&a, summary.hyperparameters.clone())?;
    let test = ingest(&cfg.require("test", &cfg.test)?)?;
    let xstar = a.standardizer.apply(&test.x);
    let preds = model.predict(&xstar)?;

    let mut csv = provenance_line(cfg);
    csv.push('\n');
    csv.push_str("mean,variance\n");
    for p in preds {
        let _ = writeln!(csv, "{:.17e},{:.17e}", p.mean + a.y_offset, p.variance);
    }
    write_output(out, &csv)
}

fn report_csv(cfg: &RunConfig, header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut csv = provenance_line(cfg);
    csv.push('\n');
    csv.push_str(header);
    csv.push('\n');
    for row in rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    csv
}

/// `cv-sweep`: k-fold CV over the simulated-to-real ratio list, long-format
/// CSV output (one row per method/cell).
pub fn cmd_cv_sweep(cfg: &RunConfig, out: &Path) -> Result<ExperimentReport> {
    let real = ingest(&cfg.require("real", &cfg.real)?)?;
    let simulated = ingest(&cfg.require("simulated", &cfg.simulated)?)?;
    let plan = CvPlan {
        folds: cfg.folds,
        ratios: cfg.ratios.clone(),
        repetitions: cfg.repetitions,
        seed: cfg.seed,
    };
    let report = run_cv_sweep(&real, &simulated, &plan, &cfg.parsed_methods()?, &cfg.harness_config())?;
    let csv = report_csv(
        cfg,
        "method,p,repetition,fold,rmse,lengthscale,noise_std,trust,with_replacement",
        report.records.iter().map(|r| {
            format!(
                "{},{},{},{},{:.17e},{:.17e},{:.17e},{},{}",
                r.method, r.p, r.repetition, r.fold, r.rmse, r.lengthscale, r.noise_std,
                fmt_trust(&r.trust), r.with_replacement
            )
        }),
    );
    write_output(out, &csv)?;
    Ok(report)
}

/// `extrapolate`: quantile split on the configured feature, one RMSE row
/// per method.
pub fn cmd_extrapolate(cfg: &RunConfig, out: &Path) -> Result<ExperimentReport> {
    let real = ingest(&cfg.require("real", &cfg.real)?)?;
    let simulated = ingest(&cfg.require("simulated", &cfg.simulated)?)?;
    let plan = SplitPlan { feature: cfg.split_feature, quantile: cfg.quantile, seed: cfg.seed };
    let report =
        run_extrapolation(&real, &simulated, &plan, &cfg.parsed_methods()?, &cfg.harness_config())?;
    let csv = report_csv(
        cfg,
        "method,rmse,lengthscale,noise_std,trust",
        report.records.iter().map(|r| {
            format!(
                "{},{:.17e},{:.17e},{:.17e},{}",
                r.method, r.rmse, r.lengthscale, r.noise_std, fmt_trust(&r.trust)
            )
        }),
    );
    write_output(out, &csv)?;
    Ok(report)
}

/// `toy-sweep`: damped-sine bias/noise grid, long-format CSV output.
pub fn cmd_toy_sweep(cfg: &RunConfig, out: &Path) -> Result<ExperimentReport> {
    let plan = ToySweepPlan {
        biases: cfg.biases.clone(),
        sigmas: cfg.sigmas.clone(),
        repetitions: cfg.repetitions,
        real_count: cfg.toy_real_count,
        sim_count: cfg.toy_sim_count,
        test_count: cfg.toy_test_count,
        seed: cfg.seed,
    };
    let report = run_toy_sweep(&plan, &cfg.parsed_methods()?, &cfg.harness_config())?;
    let csv = report_csv(
        cfg,
        "b_sim,sigma_sim,method,repetition,rmse,lengthscale,noise_std,trust",
        report.records.iter().map(|r| {
            format!(
                "{},{},{},{},{:.17e},{:.17e},{:.17e},{}",
                r.bias, r.sigma, r.method, r.repetition, r.rmse, r.lengthscale, r.noise_std,
                fmt_trust(&r.trust)
            )
        }),
    );
    write_output(out, &csv)?;
    Ok(report)
}

/// `data-summary`: per-source counts and per-column statistics as comment
/// lines, followed by a two-column split-feature-vs-target CSV for external
/// scatterplotting.
pub fn cmd_data_summary(cfg: &RunConfig, out: &Path) -> Result<()> {
    let ds = ingest(&cfg.require("real", &cfg.real)?)?;
    if cfg.split_feature >= ds.dim() {
        return Err(Error::Config(format!(
            "split feature index {} out of range for {} features",
            cfg.split_feature,
            ds.dim()
        )));
    }
    let mut csv = provenance_line(cfg);
    csv.push('\n');
    let _ = writeln!(csv, "# rows={} features={}", ds.len(), ds.dim());
    let mut sources: Vec<usize> = ds.labels.clone();
    sources.sort_unstable();
    sources.dedup();
    for s in sources {
        let count = ds.labels.iter().filter(|&&l| l == s).count();
        let _ = writeln!(csv, "# source {s}: {count} rows");
    }
    let n = ds.len() as f64;
    for (j, name) in ds.feature_names.iter().enumerate() {
        let col = ds.x.column(j);
        let mean = col.sum() / n;
        let std = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        let _ = writeln!(csv, "# column {name}: mean={mean:.6e} std={std:.6e}");
    }
    let tmean = ds.y.sum() / n;
    let tstd = (ds.y.iter().map(|v| (v - tmean) * (v - tmean)).sum::<f64>() / n).sqrt();
    let _ = writeln!(csv, "# column target: mean={tmean:.6e} std={tstd:.6e}");
    let _ = writeln!(csv, "{},target", ds.feature_names[cfg.split_feature]);
    for i in 0..ds.len() {
        let _ = writeln!(csv, "{:.17e},{:.17e}", ds.x[[i, cfg.split_feature]], ds.y[i]);
    }
    write_output(out, &csv)
}
