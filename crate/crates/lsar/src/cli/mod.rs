// SPDX-License-Identifier: MIT OR Apache-2.0

//! Argument definitions and dispatch for the `lsar` binary.
//!
//! Summary lines on stdout start with `lsar:`. Errors go to stderr as one
//! JSON object `{"error": {...}}` and set the exit code by class: usage 2,
//! data 3, numerical 4.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lsar_core::{Beta, DeltaSchedule, SampleSizeRule, SamplingSettings};

use crate::error::{CliError, ErrorClass, Result};
use crate::io::{ColumnSelector, Delimiter, IngestSpec, Transform};
use crate::report::Format;

#[derive(Debug, Parser)]
#[command(name = "lsar", version, about = "Leverage-score sampling for autoregressive models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an AR(p) series and write it as a one-column CSV with header `y`.
    Generate(GenerateArgs),
    /// Read one column of a delimited file, transform it, and write a series file.
    Ingest(IngestArgs),
    /// Fit an AR(p) model by full least squares or along a sampled walk.
    Fit(FitArgs),
    /// Partial autocorrelations with zero-confidence bands.
    Pacf(PacfArgs),
    /// Select the order and fit it by leverage-score sampling.
    Lsar(LsarArgs),
    /// Evaluation studies.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// MPRE of fully-approximate scores per order, with both bound curves.
    Mpre(MpreArgs),
    /// Bound curves only, from full-data fits.
    Bounds(BoundsArgs),
    /// Relative parameter error and residual ratio, leverage vs uniform sampling.
    Ratios(RatiosArgs),
    /// Per-order wall time of exact vs fully-approximate scores.
    Timing(TimingArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    Ar5,
    Ar16,
    Ar20,
}

impl Fixture {
    pub fn coefficients(self) -> &'static [f64] {
        use lsar_core::fixtures::*;
        match self {
            Fixture::Ar5 => &AR5,
            Fixture::Ar16 => &AR16,
            Fixture::Ar20 => &AR20,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Comma-separated coefficients phi_1..phi_p (empty for white noise).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "fixture")]
    pub phi: Vec<f64>,
    /// Built-in causal coefficient set.
    #[arg(long, value_enum)]
    pub fixture: Option<Fixture>,
    /// Innovation standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Number of retained observations.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Discarded leading samples (default 10 p + 1000).
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Fraction of points to multiply by `--contaminate-factor`.
    #[arg(long)]
    pub contaminate: Option<f64>,
    #[arg(long, default_value_t = 50.0, requires = "contaminate")]
    pub contaminate_factor: f64,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Delimited text file holding the series.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Column name, or 0-based column index.
    #[arg(long, default_value = "0")]
    pub column: ColumnSelector,
    /// Single character, `tab`, or `whitespace`.
    #[arg(long, default_value = ",")]
    pub delimiter: Delimiter,
    /// The first non-comment line is data, not a header.
    #[arg(long)]
    pub no_header: bool,
    #[arg(long, value_enum, default_value_t = Transform::None)]
    pub transform: Transform,
}

impl InputArgs {
    pub fn spec(&self) -> IngestSpec {
        IngestSpec {
            path: self.input.clone(),
            column: self.column.clone(),
            transform: self.transform,
            delimiter: self.delimiter,
            has_header: !self.no_header,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report file; format follows the extension unless `--format` is given.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    PerOrder,
    Uniform,
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta0: f64,
    #[arg(long, value_enum, default_value_t = ScheduleArg::PerOrder)]
    pub delta_schedule: ScheduleArg,
    /// Sample size as a fraction of n (default 0.001).
    #[arg(long, conflicts_with_all = ["sample_size", "theoretical_c"])]
    pub fraction: Option<f64>,
    /// Fixed sample size per order.
    #[arg(long, conflicts_with = "theoretical_c")]
    pub sample_size: Option<usize>,
    /// Constant c of the rule s = c p ln(p/delta) / (beta eps^2).
    #[arg(long)]
    pub theoretical_c: Option<f64>,
    /// Fixed beta for the theoretical rule; default max(floor, 1 - c_beta p sqrt(eps)).
    #[arg(long, requires = "theoretical_c")]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub beta_c: f64,
    #[arg(long, default_value_t = 0.1)]
    pub beta_floor: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SamplingArgs {
    pub fn rule(&self) -> SampleSizeRule {
        if let Some(constant) = self.theoretical_c {
            let beta = match self.beta {
                Some(b) => Beta::Fixed(b),
                None => Beta::OrderScaled {
                    c: self.beta_c,
                    floor: self.beta_floor,
                },
            };
            SampleSizeRule::Theoretical { constant, beta }
        } else if let Some(s) = self.sample_size {
            SampleSizeRule::Fixed(s)
        } else {
            SampleSizeRule::Fraction(self.fraction.unwrap_or(0.001))
        }
    }

    pub fn schedule(&self) -> DeltaSchedule {
        match self.delta_schedule {
            ScheduleArg::PerOrder => DeltaSchedule::PerOrder,
            ScheduleArg::Uniform => DeltaSchedule::Uniform,
        }
    }

    pub fn settings(&self) -> SamplingSettings {
        SamplingSettings {
            rule: self.rule(),
            epsilon: self.epsilon,
            delta0: self.delta0,
            schedule: self.schedule(),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Series file to write (header `y`).
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, short = 'p', alias = "order")]
    pub p: usize,
    /// Use the fully-approximate walk's sampled fit instead of full least squares.
    #[arg(long)]
    pub sampled: bool,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PacfArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, alias = "max-order")]
    pub pbar: usize,
    /// Full-data fits at every lag (the default).
    #[arg(long, conflicts_with = "sampled")]
    pub exact: bool,
    /// Estimates from the sampled fits of the order walk.
    #[arg(long)]
    pub sampled: bool,
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth_multiplier: f64,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LsarArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, alias = "max-order")]
    pub pbar: usize,
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth_multiplier: f64,
    /// Identity plans at every order (exact recursion, full-data fits).
    #[arg(long)]
    pub full_plans: bool,
    /// Refit the selected order by full least squares.
    #[arg(long)]
    pub refit_full: bool,
    /// Add per-order wall times to the report rows.
    #[arg(long)]
    pub timings: bool,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MpreArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, alias = "max-order")]
    pub pbar: usize,
    #[arg(long, default_value_t = 1.0)]
    pub c_log: f64,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, alias = "max-order")]
    pub pbar: usize,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_log: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RatiosArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, short = 'p', alias = "order")]
    pub p: usize,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for independent cells.
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TimingArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, alias = "max-order")]
    pub pbar: usize,
    /// Accepted for symmetry; timing always runs on one thread.
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = CliError::Usage(e.to_string().trim().to_owned());
            eprintln!("{}", err.to_json());
            return ErrorClass::Usage.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.class().exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Ingest(a) => commands::ingest(a),
        Command::Fit(a) => commands::fit(a),
        Command::Pacf(a) => commands::pacf(a),
        Command::Lsar(a) => commands::lsar(a),
        Command::Eval(EvalCommand::Mpre(a)) => commands::eval_mpre(a),
        Command::Eval(EvalCommand::Bounds(a)) => commands::eval_bounds(a),
        Command::Eval(EvalCommand::Ratios(a)) => commands::eval_ratios(a),
        Command::Eval(EvalCommand::Timing(a)) => commands::eval_timing(a),
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
