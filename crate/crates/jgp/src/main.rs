use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jgp::cli::{
    cmd_cv_sweep, cmd_data_summary, cmd_extrapolate, cmd_fit, cmd_predict, cmd_toy_sweep,
    RunConfig,
};
use jgp::error::{Error, Result};

/// Joint Gaussian-process regression over real and simulated data, with an
/// experiment harness for cross-validation, extrapolation, and toy sweeps.
#[derive(Parser)]
#[command(name = "jgp", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for harness commands (0 = auto).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one method and write a JSON model summary.
    Fit,
    /// Rebuild a fitted model and predict a test CSV (columns mean, variance).
    Predict {
        /// Model summary JSON produced by `fit`.
        #[arg(long)]
        model: PathBuf,
    },
    /// k-fold CV with a simulated-to-real ratio sweep (long-format CSV).
    CvSweep,
    /// Quantile extrapolation split, one RMSE row per method.
    Extrapolate,
    /// Toy bias/noise robustness grid (long-format CSV).
    ToySweep,
    /// Per-source counts, column statistics, and a feature-vs-target CSV.
    DataSummary,
}

fn run(args: &Args) -> Result<()> {
    if args.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let cfg = RunConfig::load(args.config.as_deref(), args.seed)?;
    let out = args
        .out
        .clone()
        .ok_or_else(|| Error::Config("--out <path> is required".into()))?;
    match &args.command {
        Command::Fit => cmd_fit(&cfg, &out),
        Command::Predict { model } => cmd_predict(&cfg, model, &out),
        Command::CvSweep => cmd_cv_sweep(&cfg, &out).map(|_| ()),
        Command::Extrapolate => cmd_extrapolate(&cfg, &out).map(|_| ()),
        Command::ToySweep => cmd_toy_sweep(&cfg, &out).map(|_| ()),
        Command::DataSummary => cmd_data_summary(&cfg, &out),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: exit_code={} message={e}", e.exit_code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
