//! Subcommands of the `mginf` binary.

pub mod config;
pub mod curves;
pub mod error;
pub mod eval;
pub mod format;
pub mod output;
pub mod simulate;
pub mod verify;

use clap::{Parser, Subcommand};

use config::{RunArgs, RunConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "mginf",
    version,
    about = "Busy periods of M|G|∞ queues with Riccati service laws"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate G, B, Z, p00, p1'0, the monotony indicator and the envelopes.
    Eval(RunArgs),
    /// Simulate busy cycles and compare them with the analytic curves.
    Simulate(RunArgs),
    /// Run the cross-validation checks for one parameter point.
    Verify(RunArgs),
}

/// Exit code of a parsed command line.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Eval(args) => RunConfig::from_args(args)
            .and_then(|c| eval::run_eval(&c))
            .map(|_| true),
        Command::Simulate(args) => RunConfig::from_args(args)
            .and_then(|c| simulate::run_simulate(&c))
            .map(|_| true),
        Command::Verify(args) => RunConfig::from_args(args).and_then(|c| verify::run_verify(&c)),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => report(&e),
    }
}

fn report(e: &CliError) -> i32 {
    eprintln!("mginf: {e}");
    e.exit_code()
}
