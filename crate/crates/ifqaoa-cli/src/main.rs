//! `ifqaoa` — dataset generation, single runs, benchmark sweeps, and report
//! emission for the constrained-QAOA simulation engine.
//!
//! Exit codes: 0 success, 2 usage, 3 invalid data, 4 numeric abort
//! (vanishing measurement success), 5 I/O.

mod bench;
mod gen;
mod report;
mod run;
mod theta_cmd;

use clap::{Parser, Subcommand};
use ifqaoa_core::Error;

#[derive(Parser)]
#[command(name = "ifqaoa", version, about = "Penalty-free constrained QAOA benchmark engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate real-valued and integer knapsack datasets.
    Gen(gen::GenArgs),
    /// Run the depth-sequential protocol for one instance and method.
    Run(run::RunArgs),
    /// Sweep instances x methods x register sizes with a worker pool.
    Bench(bench::BenchArgs),
    /// Dump the approximate sign function as CSV for plotting.
    Theta(theta_cmd::ThetaArgs),
    /// Rebuild summary and plot files from an existing record log.
    Report(report::ReportArgs),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(args) => gen::execute(args),
        Command::Run(args) => run::execute(args),
        Command::Bench(args) => bench::execute(args),
        Command::Theta(args) => theta_cmd::execute(args),
        Command::Report(args) => report::execute(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::VanishingSuccess { .. } | Error::NonFinite { .. } => 4,
        Error::Io(_) => 5,
        _ => 3,
    }
}
