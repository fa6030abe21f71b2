//! `homsde` — calibrate, forecast, and evaluate delayed mean-reversion
//! models of commodity spot prices.
//!
//! The pipeline runs in stages, each a subcommand: `fit` estimates
//! parameters from a spot-price CSV, `forecast` simulates the fitted model
//! forward, `evaluate` scores the delayed model against the memoryless
//! baseline on held-out data, `goftest` checks the simulated price
//! distribution for log-normality, `simulate` generates raw ensembles, and
//! `detect-frozen` flags constant-price stretches worth excluding.
//!
//! Configuration precedence: command-line flags override config-file values,
//! which override defaults. Every run writes the effective merged config
//! next to its outputs, and rerunning from that config reproduces every
//! output byte for byte.

mod commands;
mod out;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use homsde::likelihood::FreeParam;
use homsde::model::ModelKind;

#[derive(Parser)]
#[command(name = "homsde", version, about = "Delayed mean-reversion modeling of commodity spot prices")]
struct Cli {
    /// Worker threads for simulation and scans (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Run configuration file, .toml or .json; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Spot-price CSV with a header row.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Directory the run writes into (default: homsde_out).
    #[arg(long)]
    output_dir: Option<PathBuf>,

    /// Master seed; all randomness derives from it.
    #[arg(long)]
    seed: Option<u64>,

    /// Leading observations reserved as delay history.
    #[arg(long)]
    history_len: Option<usize>,

    /// Fraction of the remaining observations used for training.
    #[arg(long)]
    train_frac: Option<f64>,

    /// Monte-Carlo ensemble size.
    #[arg(long)]
    n_paths: Option<usize>,

    /// Steps to simulate (defaults to the validation length).
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Hom,
    Markov,
}

impl From<ModelArg> for ModelKind {
    fn from(value: ModelArg) -> Self {
        match value {
            ModelArg::Hom => ModelKind::Hom,
            ModelArg::Markov => ModelKind::Markov,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum EnsembleExport {
    /// Per-step mean and 5th/95th percentiles.
    Summary,
    /// The full path matrix, one row per path.
    Paths,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ProfileParam {
    A,
    B,
    Sigma,
    Tau,
}

impl From<ProfileParam> for FreeParam {
    fn from(value: ProfileParam) -> Self {
        match value {
            ProfileParam::A => FreeParam::A,
            ProfileParam::B => FreeParam::B,
            ProfileParam::Sigma => FreeParam::Sigma,
            ProfileParam::Tau => FreeParam::Tau,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate model parameters from a spot-price CSV.
    Fit {
        #[command(flatten)]
        common: CommonOpts,
        /// Which model to fit; markov pins the delay to zero.
        #[arg(long, value_enum, default_value = "hom")]
        model: ModelArg,
        /// Also write the full per-sweep trace as trace.json.
        #[arg(long)]
        trace: bool,
        /// Also write a likelihood profile CSV for one parameter.
        #[arg(long, value_enum)]
        profile: Option<ProfileParam>,
    },
    /// Simulate the forecast ensemble for fitted parameters.
    Forecast {
        #[command(flatten)]
        common: CommonOpts,
        /// Fitted parameters (params.json from a fit run).
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_enum, default_value = "summary")]
        export: EnsembleExport,
    },
    /// Fit (or load) both models and score them on the validation window.
    Evaluate {
        #[command(flatten)]
        common: CommonOpts,
        /// Pre-fitted delayed-model parameters; omit to fit in place.
        #[arg(long, requires = "markov_params")]
        hom_params: Option<PathBuf>,
        /// Pre-fitted memoryless-model parameters; omit to fit in place.
        #[arg(long, requires = "hom_params")]
        markov_params: Option<PathBuf>,
    },
    /// Test the simulated price distribution for log-normality.
    Goftest {
        #[command(flatten)]
        common: CommonOpts,
        /// Fitted parameters to simulate the tested ensemble from.
        #[arg(long, conflicts_with = "ensemble")]
        params: Option<PathBuf>,
        /// Previously exported ensemble_paths.csv to test directly.
        #[arg(long)]
        ensemble: Option<PathBuf>,
        /// Horizon steps to test, e.g. --steps 90,150,210.
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<usize>>,
        /// Histogram bins for the log-price export.
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Generate a raw ensemble from fitted parameters.
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        params: PathBuf,
        /// Start flat at this price instead of at the input data's tail.
        #[arg(long)]
        anchor: Option<f64>,
        #[arg(long, value_enum, default_value = "paths")]
        export: EnsembleExport,
    },
    /// Report runs of constant prices (frozen markets).
    DetectFrozen {
        #[command(flatten)]
        common: CommonOpts,
        /// Minimum number of consecutive identical prices to report.
        #[arg(long, default_value_t = 5)]
        min_run: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: threads: {err}");
            return ExitCode::FAILURE;
        }
    }
    let result = match &cli.command {
        Command::Fit { common, model, trace, profile } => commands::cmd_fit(common, (*model).into(), *trace, *profile),
        Command::Forecast { common, params, export } => commands::cmd_forecast(common, params, *export),
        Command::Evaluate { common, hom_params, markov_params } => {
            commands::cmd_evaluate(common, hom_params.as_deref(), markov_params.as_deref())
        }
        Command::Goftest { common, params, ensemble, steps, bins } => {
            commands::cmd_goftest(common, params.as_deref(), ensemble.as_deref(), steps.clone(), *bins)
        }
        Command::Simulate { common, params, anchor, export } => {
            commands::cmd_simulate(common, params, *anchor, *export)
        }
        Command::DetectFrozen { common, min_run } => commands::cmd_detect_frozen(common, *min_run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
