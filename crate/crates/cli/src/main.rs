#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod error;
mod output;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

/// Build, simulate and analyse reduced phase-estimation circuits.
///
/// Phases are given as multiples of π: `21/64` means 21π/64.
#[derive(Debug, Parser)]
#[command(name = "rqpe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a circuit that tells a finite set of phases apart.
    Generate(GenerateArgs),
    /// Outcome distribution at one phase, optionally with samples.
    Simulate(SimulateArgs),
    /// Outcome probabilities over a phase grid, as CSV.
    Probmap(ProbmapArgs),
    /// Distance between phases, or the full distance grid as CSV.
    Distance(DistanceArgs),
    /// Closed-form and finite-difference Fisher information.
    Fisher(FisherArgs),
    /// Decode a measured bitstring to a phase.
    Estimate(EstimateArgs),
    /// Repeated runs with Bayesian updates on a grid.
    Bayes(BayesArgs),
    /// Resource comparison between Ramsey, QPE and binned RQPE.
    Compare(CompareArgs),
    /// Re-export a circuit as OpenQASM 3 or JSON.
    Export(ExportArgs),
    /// Regenerate every reference dataset under one directory.
    Repro(ReproArgs),
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["phases", "phases_file", "bit_values"])))]
struct GenerateArgs {
    /// Comma-separated phases in units of π (`p/q` or decimals).
    #[arg(long, allow_hyphen_values = true)]
    phases: Option<String>,
    /// File with phases separated by commas, whitespace or newlines; `#` starts a comment.
    #[arg(long)]
    phases_file: Option<PathBuf>,
    /// Comma-separated bit values in units of π; builds the circuit directly.
    #[arg(long, allow_hyphen_values = true)]
    bit_values: Option<String>,
    /// Tolerance for turning decimal phases into fractions.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Keep phantom lines in the written circuit.
    #[arg(long)]
    keep_phantoms: bool,
    /// Circuit JSON output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reduction trace JSON output path.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Phase in units of π.
    #[arg(long, allow_hyphen_values = true)]
    theta: String,
    /// Also draw this many runs.
    #[arg(long, default_value_t = 0)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the full statevector instead of the line-by-line model.
    #[arg(long)]
    statevector: bool,
    /// CSV output path (`bitstring,probability`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProbmapArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long, default_value_t = 512)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DistanceArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Grid size for the full matrix.
    #[arg(long, default_value_t = 256)]
    grid: usize,
    /// First phase (units of π); with `--theta-b`, prints a single distance.
    #[arg(long, allow_hyphen_values = true, requires = "theta_b")]
    theta_a: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires = "theta_a")]
    theta_b: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FisherArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Phase for the numerical check, in radians. Defaults to a generic value.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    /// Runs for the Cramér–Rao bound.
    #[arg(long, default_value_t = 1000)]
    runs: u64,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Measured bits, first line first, e.g. `100`.
    #[arg(long)]
    bits: String,
}

#[derive(Debug, Args)]
struct BayesArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// True phase, units of π.
    #[arg(long, allow_hyphen_values = true)]
    theta: String,
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    /// `full` or `lo:hi` in units of π, e.g. `1:7/6`.
    #[arg(long, default_value = "full")]
    prior: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for `experiment.csv` and `posterior.csv`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Target precision `p` (resolution 1/p).
    #[arg(long)]
    precision: f64,
    /// Largest phase in units of π, as `p/q` or a decimal.
    #[arg(long)]
    range: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ExportFormat {
    Qasm,
    Json,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long, value_enum, default_value_t = ExportFormat::Qasm)]
    format: ExportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReproArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Bayesian runs per experiment.
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    /// Posterior grid size.
    #[arg(long, default_value_t = 4096)]
    grid: usize,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Probmap(a) => commands::probmap(a),
        Command::Distance(a) => commands::distance(a),
        Command::Fisher(a) => commands::fisher(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Bayes(a) => commands::bayes(a),
        Command::Compare(a) => commands::compare(a),
        Command::Export(a) => commands::export(a),
        Command::Repro(a) => commands::repro(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
