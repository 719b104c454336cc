//! Command-line driver. [`run`] parses arguments and dispatches, so the
//! binary and in-process callers behave identically.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

/// A configuration or usage problem reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "xfmr-aging", version, about = "Transformer insulation loss of life and its learned surrogates")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// RNG seed for synthesis, splitting and training.
    #[arg(long, global = true, env = "XFMR_SEED")]
    pub seed: Option<u64>,

    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Hourly CSV with columns timestamp,ambient_temp_c,load_ratio.
    #[arg(long, global = true, conflicts_with = "synthetic")]
    pub input: Option<PathBuf>,

    /// Synthetic profile: `default`, `key=value,...` overrides, or a TOML file.
    #[arg(long, global = true)]
    pub synthetic: Option<String>,

    /// Length of a synthetic series in hours.
    #[arg(long, global = true)]
    pub hours: Option<usize>,

    /// TOML file with transformer parameters.
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,

    /// Skip bad-data repair.
    #[arg(long, global = true)]
    pub no_preprocess: bool,

    /// Also write training times into output files (makes them differ
    /// between runs).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the thermal model and write per-hour loss of life.
    ComputeLol,
    /// Train one-epoch ANFIS models over a range of cluster counts.
    ClusterSweep {
        #[arg(long)]
        c_min: Option<usize>,
        #[arg(long)]
        c_max: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Train one estimator and score it on the held-out split.
    Train {
        #[arg(long, value_enum)]
        method: Method,
        #[command(flatten)]
        args: TrainArgs,
    },
    /// Train all three estimators on one split and rank them.
    Compare(TrainArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Anfis,
    Mlp,
    Rbf,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Anfis => "anfis",
            Method::Mlp => "mlp",
            Method::Rbf => "rbf",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Anfis => "ANFIS",
            Method::Mlp => "MLP",
            Method::Rbf => "RBF",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// ANFIS rule count (fuzzy c-means clusters).
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Training epochs for ANFIS or the MLP.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Gradient step size for ANFIS premises or MLP weights.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Share of rows held out for testing.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// RBF training MSE at which neuron insertion stops.
    #[arg(long)]
    pub mse_goal: Option<f64>,
    /// Upper bound on RBF neurons.
    #[arg(long)]
    pub max_neurons: Option<usize>,
    /// Also run k-fold cross-validation on the training split.
    #[arg(long)]
    pub cv_folds: Option<usize>,
}

/// Exit status for a failed command: 2 for usage and input problems.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<xfmr_aging::Error>() {
        Some(e) if e.is_user_error() => 2,
        _ => 1,
    }
}

/// Runs one invocation and returns its process exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return u8::try_from(err.exit_code()).unwrap_or(2);
        }
    };
    let result = commands::Context::new(&cli.global).and_then(|ctx| match cli.command {
        Command::ComputeLol => commands::compute_lol(&ctx),
        Command::ClusterSweep { c_min, c_max, threshold } => commands::cluster_sweep(&ctx, c_min, c_max, threshold),
        Command::Train { method, args } => commands::train(&ctx, method, &args),
        Command::Compare(args) => commands::compare(&ctx, &args),
    });
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code(&err)
        }
    }
}
