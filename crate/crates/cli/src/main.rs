//! `mmdt` — train, apply, and benchmark max-margin domain transform
//! models from the command line.
//!
//! Exit codes: 0 success, 1 solver failure, 2 bad flags or configuration,
//! 3 data errors. Data goes to standard output, diagnostics to standard
//! error.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "mmdt", version, about = "Transform-based domain adaptation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    L1,
    L2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Pure,
    Identity,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Rotation,
    Linear,
    Bias,
    Dimchange,
}

#[derive(Args)]
struct TrainArgs {
    /// Source-domain training data (sparse text format).
    #[arg(long)]
    source: String,
    /// Target-domain training data (sparse text format).
    #[arg(long)]
    target: String,
    /// Where to write the trained model.
    #[arg(long)]
    out: String,
    /// Cost C on source hinge terms.
    #[arg(long = "c-src", default_value_t = 1.0)]
    c_src: f64,
    /// Cost C̃ on target hinge terms.
    #[arg(long = "c-tgt", default_value_t = 1.0)]
    c_tgt: f64,
    #[arg(long, value_enum, default_value_t = LossArg::L2)]
    loss: LossArg,
    /// Transform regularizer: pure low-rank or identity-plus-low-rank.
    #[arg(long, value_enum, default_value_t = ModeArg::Pure)]
    mode: ModeArg,
    /// Stopping tolerance on the projected-gradient gap.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Number of hyperplane/transform alternations.
    #[arg(long = "outer-iters", default_value_t = 2)]
    outer_iters: usize,
    /// Pass limit for each inner solve.
    #[arg(long = "max-passes", default_value_t = 1000)]
    max_passes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Do not append a constant-1 bias feature to both domains.
    #[arg(long = "no-bias")]
    no_bias: bool,
    /// Retrain the hyperplanes once more after the last transform solve.
    #[arg(long = "final-refresh")]
    final_refresh: bool,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    data: String,
    /// Also print the per-category scores after each prediction.
    #[arg(long)]
    scores: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    data: String,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    preset: PresetArg,
    /// Directory for the generated dataset files.
    #[arg(long = "out-dir")]
    out_dir: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long = "source-per-class", default_value_t = 20)]
    source_per_class: usize,
    #[arg(long = "target-per-class", default_value_t = 5)]
    target_per_class: usize,
    #[arg(long = "test-per-class", default_value_t = 20)]
    test_per_class: usize,
    /// Source dimension D.
    #[arg(long, default_value_t = 50)]
    dim: usize,
    /// Target dimension D̃ (defaults to the source dimension).
    #[arg(long = "target-dim")]
    target_dim: Option<usize>,
    #[arg(long, default_value_t = 3.0)]
    spread: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    /// Hold the last N classes out of target training data.
    #[arg(long, default_value_t = 0)]
    heldout: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// Grid assignments like `nt=500,1000`; keys n, nt, D, Dt, K.
    /// Repeatable; the cross product of all values is benchmarked.
    #[arg(long)]
    grid: Vec<String>,
    /// Timed repetitions per grid point (the median is reported).
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Solver passes in the timed region.
    #[arg(long, default_value_t = 4)]
    passes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a transform and one-vs-all classifiers on a source/target pair.
    Train(TrainArgs),
    /// Predict categories for target-domain examples.
    Predict(PredictArgs),
    /// Report overall and per-class accuracy on labeled data.
    Eval(EvalArgs),
    /// Generate a synthetic domain-shift benchmark.
    Synth(SynthArgs),
    /// Time transform solves across a parameter grid, as CSV.
    Bench(BenchArgs),
}

/// Failure with the exit code it maps to.
pub enum CliError {
    /// Bad flags or configuration (exit 2).
    Usage(String),
    /// Unreadable, malformed, or inconsistent data (exit 3).
    Data(String),
    /// Solver failure (exit 1).
    Solver(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Solver(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Solver(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => commands::train(&args),
        Command::Predict(args) => commands::predict(&args),
        Command::Eval(args) => commands::eval(&args),
        Command::Synth(args) => commands::synth(&args),
        Command::Bench(args) => commands::bench(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
