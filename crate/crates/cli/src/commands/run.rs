//! `grasswalk run` — one walk, one JSONL trace.

use clap::Args;
use serde_json::json;

use grasswalk::walk::run_walk;

use crate::config::{self, load};
use crate::io::write_atomic;
use crate::manifest::ManifestBuilder;
use crate::trace::{to_jsonl, trace_records};
use crate::{CliResult, Common};

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: config::ProblemFlags,

    /// Subspace dimension.
    #[arg(long)]
    pub k: Option<usize>,
    /// Planes sampled per round.
    #[arg(long = "t", alias = "T")]
    pub t: Option<usize>,
    /// Stopping accuracy ε.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    /// invariant | span-gaussian
    #[arg(long)]
    pub conditioned_mode: Option<String>,

    /// shrink | nelder-mead | exact-quadratic
    #[arg(long)]
    pub solver: Option<String>,
    /// Shrink descent: number of scales m.
    #[arg(long)]
    pub m: Option<usize>,
    /// Shrink descent: proposals per scale r.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub initial_scale: Option<f64>,

    #[command(flatten)]
    pub common: Common,
}

pub fn execute(args: RunArgs, threads: Option<usize>) -> CliResult<()> {
    let file = load(args.common.config.as_deref())?;
    let problem = config::resolve_problem(&args.problem, file.problem.as_ref())?;
    let walk = config::resolve_walk(
        args.common.seed,
        args.k,
        args.t,
        args.epsilon,
        args.max_rounds,
        args.conditioned_mode.as_deref(),
        file.walk.as_ref(),
    )?;
    let solver_spec = config::resolve_solver(
        args.solver.as_deref(),
        args.m,
        args.r,
        args.initial_scale,
        file.solver.as_ref(),
    )?;

    let resolved = json!({
        "problem": problem,
        "walk": {
            "k": walk.k,
            "t": walk.samples_per_round,
            "epsilon": walk.epsilon_a,
            "max_rounds": walk.max_rounds,
            "conditioned_mode": walk.conditioned_mode,
        },
        "solver": solver_spec,
        "emit_iterates": args.common.emit_iterates,
    });
    let manifest = ManifestBuilder::new("run", args.common.seed, threads, resolved);

    let loss = problem.build()?;
    let solver = solver_spec.build()?;
    let result = run_walk(&loss, &walk, &solver)?;

    println!(
        "final loss {:.12e} after {} rounds ({} evaluations), stop: {:?}",
        result.final_loss, result.rounds_executed, result.total_evals, result.trace.termination_reason
    );

    if let Some(out) = &args.common.out {
        let records = trace_records(&result, args.common.emit_iterates);
        write_atomic(out, to_jsonl(&records)?.as_bytes())?;
        manifest.write(out, std::slice::from_ref(out))?;
        println!("trace written to {}", out.display());
    }
    Ok(())
}
