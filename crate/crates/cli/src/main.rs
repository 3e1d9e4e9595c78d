use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

mod commands;
mod error;
mod input;
mod output;

use output::Format;

/// Sufficient dimension reduction for induced responses.
#[derive(Debug, Parser)]
#[command(name = "induced-sdr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the central subspace of an induced response from a CSV file.
    Fit(FitArgs),
    /// Run Monte Carlo tables or the single-index scenario.
    Simulate(SimulateArgs),
    /// Kaplan-Meier curve of the `y` column (with `status` if present).
    Km(KmArgs),
    /// Write a simulated data set as CSV.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    /// Two-stage: SIR on Y, then binary SIR on I(Y <= t).
    SirSir,
    /// Two-stage: SIR on Y, then binary SAVE on I(Y <= t).
    SirSave,
    /// Direct SIR; on I(Y <= t) when `--t` is given, else on Y.
    Sir,
    /// Direct binary SAVE on I(Y <= t).
    Save,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with a `y` column, optional 0/1 `status` and numeric covariates.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "sir-sir")]
    method: FitMethod,
    /// Threshold: a number, or `q:<percent>` for a Kaplan-Meier quantile of y.
    #[arg(long)]
    t: Option<String>,
    /// Dimension of the stage-one subspace.
    #[arg(long)]
    d: Option<usize>,
    /// Dimension of the induced subspace.
    #[arg(long)]
    dg: Option<usize>,
    /// Choose dimensions by the maximal eigenvalue ratio criterion.
    #[arg(long, conflicts_with_all = ["d", "dg"])]
    merc: bool,
    /// Largest dimension MERC considers [default: 5].
    #[arg(long)]
    dstar: Option<usize>,
    /// Slices for SIR on a complete response.
    #[arg(long, default_value_t = 10)]
    h: usize,
    /// Slices among censored observations (double slicing).
    #[arg(long, default_value_t = 5)]
    h0: usize,
    /// Slices among failures (double slicing).
    #[arg(long, default_value_t = 10)]
    h1: usize,
    /// Recorded in the report; estimation itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Divide each covariate by its sample standard deviation first.
    #[arg(long)]
    standardize_columns: bool,
    #[arg(long, value_enum, default_value = "tsv")]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Table1Model4,
    Table1Model5,
    IntroGamma,
    Custom,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in cell grid; `custom` (implied by `--config`) reads a JSON file.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// JSON config for `custom`; an emitted JSON report is accepted too.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores by default. Results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// Draws used for the response quantiles that set each threshold.
    #[arg(long)]
    quantile_draws: Option<usize>,
    #[arg(long, value_enum, default_value = "tsv")]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KmArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "tsv")]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Gamma,
    LognormalRatio,
    PiecewiseHazard,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    model: ModelName,
    #[arg(long)]
    n: usize,
    /// Number of covariates (the gamma model has 3).
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Apply the model's censoring law and add a `status` column.
    #[arg(long)]
    censored: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Km(a) => commands::km(&a),
        Command::Generate(a) => commands::generate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("induced-sdr: error ({}): {e}", e.kind());
            ExitCode::from(e.exit_code())
        }
    }
}
