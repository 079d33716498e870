//! Batch command-line interface.
//!
//! Exit codes: 0 on success, 2 for I/O and data errors (unreadable or invalid
//! inputs), 3 for usage/configuration errors, 4 for numerical failures.

pub mod checkpoint;
pub mod commands;
pub mod config;

use clap::{Parser, Subcommand};
use commands::*;

const CONFIG_KEYS: &str = "Config file keys (`key = value`, one per line, `#` comments):
  hidden, layers, input_steps, output_steps, batch_size, epochs,
  learning_rate, lr_decay, optimizer (sgd|rmsprop|adam|amsgrad),
  lambda1, lambda2, k_fraction, forget_bias, stride,
  train_frac, val_frac, test_frac";

#[derive(Debug, Parser)]
#[command(name = "wavecast", version, about = "Ocean-wave forecasting toolkit")]
#[command(after_help = CONFIG_KEYS, after_long_help = CONFIG_KEYS)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse buoy stdmet files and align stations on shared timestamps.
    Ingest(IngestArgs),
    /// Train a forecasting network and write a checkpoint.
    Train(TrainArgs),
    /// Forecast with a trained checkpoint and report errors.
    Forecast(ForecastArgs),
    /// Reconstruct one station's series from its neighbors.
    Reconstruct(ReconstructArgs),
    /// Search the hyperparameter grid with the GP-EI tuner.
    Tune(TuneArgs),
    /// Compute the error-metric suite for a truth/prediction pair.
    Metrics(MetricsArgs),
    /// Sweep the 1-norm penalty and rank input features.
    #[command(name = "select-features")]
    SelectFeatures(SelectFeaturesArgs),
}

/// Dispatch a parsed invocation, mapping errors to exit codes.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Ingest(args) => run_ingest(args, &cli.common),
        Command::Train(args) => run_train(args, &cli.common),
        Command::Forecast(args) => run_forecast(args, &cli.common),
        Command::Reconstruct(args) => run_reconstruct(args, &cli.common),
        Command::Tune(args) => run_tune(args, &cli.common),
        Command::Metrics(args) => run_metrics(args, &cli.common),
        Command::SelectFeatures(args) => run_select_features(args, &cli.common),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parse argv and run; clap's own help/version output exits 0, its usage
/// errors exit 3 like any other configuration problem.
pub fn main_entry<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
