//! `radner` — command-line front end for the equilibrium engine.
//!
//! Five subcommands (`solve`, `verify`, `simulate`, `welfare`, `sweep`)
//! share one flag surface and one configuration pipeline:
//! built-in defaults <- flat TOML config file <- flags. Exit codes:
//! 0 success, 1 invalid input or irrecoverable failure, 2 a named
//! correctness check failed.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use clap::{Parser, Subcommand};

use config::{Command, CommonArgs};

#[derive(Debug, Parser)]
#[command(
    name = "radner",
    version,
    about = "Equilibrium engine for a market with a noise-tracking agent: solve both \
             model variants (optimizing tracker vs pinned noise trader), verify the \
             solutions, run Monte Carlo checks, and compare aggregate welfare"
)]
struct Cli {
    #[command(subcommand)]
    command: Subcmd,
}

#[derive(Debug, Subcommand)]
enum Subcmd {
    /// Solve the equilibrium coefficient functions and emit tables
    Solve(CommonArgs),
    /// Substitute the solution into every equation and identity, and gate on
    /// the residuals
    Verify(CommonArgs),
    /// Monte Carlo martingale checks for the tracker model, with an optional
    /// path dump
    Simulate(CommonArgs),
    /// Aggregate welfare difference between the two models via two
    /// independent routes
    Welfare(CommonArgs),
    /// Welfare difference swept along one parameter axis
    Sweep(CommonArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version print to stdout and succeed; genuine usage
            // errors belong on stderr with the "invalid input" exit code.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let (args, command) = match &cli.command {
        Subcmd::Solve(a) => (a, Command::Solve),
        Subcmd::Verify(a) => (a, Command::Verify),
        Subcmd::Simulate(a) => (a, Command::Simulate),
        Subcmd::Welfare(a) => (a, Command::Welfare),
        Subcmd::Sweep(a) => (a, Command::Sweep),
    };
    let result = config::resolve(args, command).and_then(|cfg| commands::run(&cfg));
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
