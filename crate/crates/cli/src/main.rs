//! `grasswalk` — run subspace walks, studies, estimators, and verifiers.
//!
//! Subcommands: `run` (one walk, JSONL trace), `study` (repeated trials or a
//! blind-spot study), `gap` (φ statistics and gap estimation), `verify`
//! (Monte Carlo bound checks on analytic cases), `predict` (bound
//! arithmetic). Every invocation is fully determined by `--seed`; worker
//! count (`--threads`, default from `GRASSWALK_THREADS`) never changes
//! results.
//!
//! Exit codes: 0 success, 1 runtime failure (for `verify`, also any bound
//! violated beyond 3σ), 2 invalid flags or configuration.

use clap::{Parser, Subcommand};
use std::process::ExitCode;

use grasswalk_cli::{commands, CliError, CliResult, Common};

#[derive(Debug, Parser)]
#[command(name = "grasswalk", version, about = "Random-subspace-walk global optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a single walk and write its trace.
    Run(commands::run::RunArgs),
    /// Run a repeated-trial study or a blind-spot study.
    Study(commands::study::StudyArgs),
    /// Estimate φ statistics and the gap parameter.
    Gap(commands::gap::GapArgs),
    /// Verify level-set and best-of-T bounds on analytic cases.
    Verify(commands::verify::VerifyArgs),
    /// Evaluate convergence-bound arithmetic.
    Predict(commands::predict::PredictArgs),
}

fn init_threads(common: &Common) -> CliResult<Option<usize>> {
    let threads = match common.threads {
        Some(n) => Some(n),
        None => match std::env::var("GRASSWALK_THREADS") {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| {
                CliError::Config(format!("GRASSWALK_THREADS must be an integer, got {v:?}"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    Ok(threads)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Run(a) => a.common.clone(),
        Command::Study(a) => a.common.clone(),
        Command::Gap(a) => a.common.clone(),
        Command::Verify(a) => a.common.clone(),
        Command::Predict(a) => a.common.clone(),
    };

    let run = || -> CliResult<()> {
        let threads = init_threads(&common)?;
        match cli.command {
            Command::Run(args) => commands::run::execute(args, threads),
            Command::Study(args) => commands::study::execute(args, threads),
            Command::Gap(args) => commands::gap::execute(args, threads),
            Command::Verify(args) => commands::verify::execute(args, threads),
            Command::Predict(args) => commands::predict::execute(args, threads),
        }
    };

    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::BoundViolated(msg)) => {
            eprintln!("bound violated: {msg}");
            ExitCode::from(1)
        }
    }
}
