//! Command-line front end: `fit`, `simulate`, `check` and `bench`.
//!
//! Exit codes: 0 success, 1 input error, 2 solver hit `--max-iter`, 3 a penalty check
//! failed.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use plq_smoother::sim::NoiseBase;
use plq_smoother::SolverOptions;
use thiserror::Error;

pub use commands::{cmd_bench, cmd_check, cmd_fit, cmd_simulate, BenchRow, FitOutcome};
pub use report::RunReport;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_MAX_ITER: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Library(#[from] plq_smoother::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Oracle {
    /// Classical Kalman/RTS smoother (L2 penalties only).
    Rts,
    /// Dense reference interior-point solver (small problems only).
    Dense,
    /// Structured interior-point solver.
    None,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Model configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output path (fit: states CSV; simulate: file prefix).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Residual tolerance of the interior-point solver.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true)]
    pub mu_reduction: Option<f64>,
    #[arg(long, global = true)]
    pub step_frac: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Oracle::None)]
    pub oracle: Oracle,
}

impl GlobalArgs {
    pub fn solver_options(&self) -> SolverOptions {
        let d = SolverOptions::default();
        SolverOptions {
            tol_res: self.tol.unwrap_or(d.tol_res),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            mu_reduce: self.mu_reduction.unwrap_or(d.mu_reduce),
            step_frac: self.step_frac.unwrap_or(d.step_frac),
            ..d
        }
    }

    fn require_config(&self) -> Result<&PathBuf, CliError> {
        self.config.as_ref().ok_or_else(|| CliError::Input("--config is required".into()))
    }

    fn require_output(&self) -> Result<&PathBuf, CliError> {
        self.output.as_ref().ok_or_else(|| CliError::Input("--output is required".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Gaussian,
    Laplace,
}

impl From<NoiseArg> for NoiseBase {
    fn from(a: NoiseArg) -> Self {
        match a {
            NoiseArg::Gaussian => NoiseBase::Gaussian,
            NoiseArg::Laplace => NoiseBase::Laplace,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
    pub w_noise: NoiseArg,
    #[arg(long, default_value_t = 0.0)]
    pub w_outlier_prob: f64,
    #[arg(long, default_value_t = 1.0)]
    pub w_outlier_scale: f64,
    #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
    pub v_noise: NoiseArg,
    #[arg(long, default_value_t = 0.0)]
    pub v_outlier_prob: f64,
    #[arg(long, default_value_t = 1.0)]
    pub v_outlier_scale: f64,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Smooth measurements with the configured penalties.
    Fit {
        /// Measurements CSV, N rows by m columns.
        #[arg(long)]
        measurements: PathBuf,
    },
    /// Simulate a trajectory and measurements from the configured model.
    Simulate {
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Check coercivity and finiteness of the configured penalties.
    Check,
    /// Time the solver on random models over several horizons.
    Bench {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Comma-separated horizons.
        #[arg(long, value_delimiter = ',', default_values_t = [500usize, 1000, 2000, 4000])]
        sizes: Vec<usize>,
        /// Process penalty, e.g. `huber:1`.
        #[arg(long, default_value = "huber:1")]
        process: String,
        /// Measurement penalty, e.g. `l1` or `vapnik:0.1`.
        #[arg(long, default_value = "huber:1")]
        measurement: String,
        /// Solves per horizon; the fastest is reported.
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
}

#[derive(Debug, Clone, Parser)]
#[command(name = "plqs", version, about = "Kalman smoothing with piecewise linear-quadratic penalties")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Parses `args` (including the program name) and runs the command, returning the exit
/// code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let echo: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(&cli, echo) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn dispatch(cli: &Cli, echo: Vec<String>) -> Result<i32, CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Fit { measurements } => {
            let outcome =
                cmd_fit(g.require_config()?, measurements, g.require_output()?, &g.solver_options(), g.oracle, echo)?;
            Ok(outcome.exit_code)
        }
        Command::Simulate { noise } => cmd_simulate(g.require_config()?, noise, g.seed, g.require_output()?),
        Command::Check => {
            let (code, text) = cmd_check(g.require_config()?)?;
            print!("{text}");
            Ok(code)
        }
        Command::Bench { n, m, sizes, process, measurement, repeats } => {
            let rows = cmd_bench(*n, *m, sizes, process, measurement, g.seed, *repeats, &g.solver_options())?;
            println!("{}", BenchRow::header());
            for r in &rows {
                println!("{}", r.line());
            }
            Ok(if rows.iter().all(|r| r.converged) { EXIT_OK } else { EXIT_MAX_ITER })
        }
    }
}
