//! `attrition-lab`: solve, analyze and simulate bargaining games with
//! ultimatum opportunities from JSON game files.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 regime
//! error, 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod commands;
mod output;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "ATTRITION_LAB_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("invalid input: {0}")]
    Validation(String),
    /// Message and an optional regime report printed to stdout.
    #[error("regime error: {0}")]
    Regime(String, Option<serde_json::Value>),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Regime(..) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "attrition-lab", version, about = "Reputational bargaining with ultimatums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct OutArg {
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve any game file and write the profile, sampled curves and a manifest
    Solve {
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
        /// Points on the sampled time grid
        #[arg(long, default_value_t = 200)]
        grid: usize,
    },
    /// Sample the coevolution curve of a one-sided game
    Curve {
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
        #[arg(long, default_value_t = 1000)]
        points: usize,
    },
    /// Overall challenge and resolution hazards with their jumps
    Hazard {
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
        #[arg(long, default_value_t = 400)]
        grid: usize,
    },
    /// Payoff response to one parameter against the predicted signs
    Compstat {
        input: PathBuf,
        /// One of z1, z2, r1, r2, c1, k2, w1
        #[arg(long)]
        param: String,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Limit payoffs as both priors vanish
    Limit {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a game with several justified demands
    Multi {
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
        /// Re-solve this many times with perturbed brackets and report the spread
        #[arg(long, default_value_t = 0)]
        restarts: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Classify or solve a two-sided game
    Twosided {
        input: PathBuf,
        #[arg(long, conflicts_with = "solve", required_unless_present = "solve")]
        classify: bool,
        #[arg(long)]
        solve: bool,
        /// Time-0 atom `player:Q` (player 1 or 2), or `none`
        #[arg(long)]
        atom: Option<String>,
        /// Equilibrium family when both exist: type1 or type2
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        /// Sampling horizon for profiles without an end time
        #[arg(long, default_value_t = 20.0)]
        horizon: f64,
    },
    /// Monte Carlo play of the solved profile
    Simulate {
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        replications: usize,
        #[arg(long, default_value_t = 50.0)]
        time_cap: f64,
        #[arg(long, default_value_t = 0.05)]
        bin_width: f64,
        /// Points on the best-response audit grid (0 skips the audit)
        #[arg(long, default_value_t = 0)]
        grid: usize,
        /// Time-0 atom for infinite two-sided profiles
        #[arg(long)]
        atom: Option<String>,
        #[arg(long)]
        kind: Option<String>,
    },
    /// Binned hazard from a CSV of `duration, censored`
    Hazardfit {
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
        #[arg(long)]
        bin_width: f64,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Io(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Solve { input, out, grid } => commands::solve(&input, &out.out, grid),
        Command::Curve { input, out, points } => commands::curve(&input, &out.out, points),
        Command::Hazard { input, out, grid } => commands::hazard(&input, &out.out, grid),
        Command::Compstat {
            input,
            param,
            delta,
            out,
        } => commands::compstat(&input, &param, delta, out.as_deref()),
        Command::Limit { input, out } => commands::limit(&input, out.as_deref()),
        Command::Multi {
            input,
            out,
            restarts,
            seed,
        } => commands::multi(&input, &out.out, restarts, seed),
        Command::Twosided {
            input,
            classify,
            atom,
            kind,
            out,
            grid,
            horizon,
            ..
        } => commands::twosided(&input, classify, atom.as_deref(), kind.as_deref(), out.as_deref(), grid, horizon),
        Command::Simulate {
            input,
            out,
            seed,
            replications,
            time_cap,
            bin_width,
            grid,
            atom,
            kind,
        } => commands::simulate(
            &input,
            &out.out,
            commands::SimArgs {
                seed,
                replications,
                time_cap,
                bin_width,
                grid,
                atom,
                kind,
            },
        ),
        Command::Hazardfit { input, out, bin_width } => commands::hazardfit(&input, &out.out, bin_width),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if let CliError::Regime(_, Some(report)) = &err {
                println!("{}", output::render_json(report).trim_end());
            }
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}
