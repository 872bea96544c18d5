//! Batch front door: config-driven experiment runner emitting CSV tables and
//! grid dumps.
//!
//! Exit codes: 0 success, 2 precondition rejection, 3 numerical failure,
//! 64 unknown command, 65 invalid configuration.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

mod commands;
mod config;

#[derive(Parser)]
#[command(name = "qpdo", about = "Spectral solvers for digital pseudo-differential equations on the lattice quadrant")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV reports and grid dumps.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Seed for catalog data generation; recorded in outputs.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Dotted-path config overrides, e.g. `grid.n=64`.
    #[arg(long = "override", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Unique solve of the quadrant equation.
    SolveUnique,
    /// General solution with layer functions.
    GeneralSolution,
    /// Dirichlet reduction to the dense layer system.
    SolveDirichlet,
    /// Nonlocal boundary value problem.
    SolveNonlocal,
    /// Projector and transform diagnostics.
    Project,
    /// Exponential-split factorization sweep.
    FactorizeExp,
    /// Order certificates across lattice steps.
    CertifySymbol,
    /// Dense-oracle equivalence comparison.
    OracleCompare,
    /// Discrete-versus-continuous convergence study.
    Convergence,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SolveUnique => "solve-unique",
            Command::GeneralSolution => "general-solution",
            Command::SolveDirichlet => "solve-dirichlet",
            Command::SolveNonlocal => "solve-nonlocal",
            Command::Project => "project",
            Command::FactorizeExp => "factorize-exp",
            Command::CertifySymbol => "certify-symbol",
            Command::OracleCompare => "oracle-compare",
            Command::Convergence => "convergence",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    return ExitCode::SUCCESS;
                }
                ErrorKind::InvalidSubcommand | ErrorKind::UnknownArgument => 64,
                _ => 65,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let config = match config::load(cli.config.as_deref(), &cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(65);
        }
    };
    let seed = cli.seed.unwrap_or(config.seed);
    let ctx = commands::RunContext {
        config,
        out: cli.out.clone(),
        seed,
        command: cli.command.name().to_string(),
    };
    if let Err(e) = commands::prepare_output(&ctx.out) {
        eprintln!("cannot create output directory: {e}");
        return ExitCode::from(3);
    }
    match commands::dispatch(&ctx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}: {e}", ctx.command);
            let code = commands::exit_code_for(&e);
            // Rejected runs still record what was measured.
            let _ = std::fs::write(
                ctx.out.join("error.meta"),
                format!("command = {}\nseed = {}\nerror = {e}\nexit = {code}\n", ctx.command, seed),
            );
            ExitCode::from(code as u8)
        }
    }
}
