use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use lqig_cli::dual::DualArgs;
use lqig_cli::manifest::Invocation;
use lqig_cli::plots::PlotsArgs;
use lqig_cli::simulate::SimulateArgs;
use lqig_cli::solve::SolveArgs;
use lqig_cli::verify::VerifyArgs;
use lqig_cli::{dual, plots, simulate, solve, verify};

/// Solver for zero-sum LQ games with one-sided payoff information.
///
/// Exit codes: 0 success, 1 error, 2 solve did not converge, 3 verification failed.
#[derive(Debug, Parser)]
#[command(name = "lqig", version)]
struct Cli {
    /// Worker threads for the parallel parts of the solver.
    #[arg(long, global = true, env = "LQIG_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize the informed player's signaling policy.
    Solve(SolveArgs),
    /// Roll out a solved policy, with or without receding-horizon re-solving.
    Simulate(SimulateArgs),
    /// Evaluate a fixed dual tree at given probes.
    Dual(DualArgs),
    /// Run the oracle suites.
    Verify(VerifyArgs),
    /// Write per-trajectory and paired-cost CSV files for plotting.
    ExportPlotsData(PlotsArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let inv = Invocation::new(std::env::args().skip(1).collect());
    let result = match &cli.command {
        Command::Solve(a) => solve::run(a, &inv),
        Command::Simulate(a) => simulate::run(a, &inv),
        Command::Dual(a) => dual::run(a, &inv),
        Command::Verify(a) => verify::run(a, &inv),
        Command::ExportPlotsData(a) => plots::run(a, &inv),
    };
    match result {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
