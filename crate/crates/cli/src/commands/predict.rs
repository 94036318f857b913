//! `grasswalk predict` — convergence-bound arithmetic at explicit values.

use clap::Args;
use serde_json::json;

use grasswalk::analysis::predict_bounds;

use crate::io::write_json;
use crate::manifest::ManifestBuilder;
use crate::{CliResult, Common};

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct PredictArgs {
    /// Deviation ratio δ ∈ [0, 1).
    #[arg(long)]
    pub delta: f64,
    /// Gap parameter Θ ∈ (0, √2).
    #[arg(long)]
    pub theta: f64,
    /// Loss range α_max − α_min.
    #[arg(long, default_value_t = 1.0)]
    pub alpha_range: f64,
    /// Stopping accuracy ε.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Samples per round T.
    #[arg(long = "t", alias = "T", default_value_t = 1)]
    pub t: usize,
    /// Round count n for the n-dependent quantities.
    #[arg(long, default_value_t = 0)]
    pub n: u64,

    #[command(flatten)]
    pub common: Common,
}

pub fn execute(args: PredictArgs, threads: Option<usize>) -> CliResult<()> {
    let bounds = predict_bounds(
        args.delta,
        args.theta,
        args.alpha_range,
        args.epsilon,
        args.t,
        args.n,
    )?;
    println!(
        "rate bound after n={} rounds: {:.6e}",
        args.n, bounds.rate_bound
    );
    println!("predicted termination round cap: {}", bounds.n_predicted);
    println!(
        "success probability at T={}, n={}: {:.6e}",
        args.t, args.n, bounds.success_probability
    );
    println!("T for success ≥ 1/2: {}", bounds.t_for_half);

    if let Some(out) = &args.common.out {
        let resolved = json!({
            "delta": args.delta,
            "theta": args.theta,
            "alpha_range": args.alpha_range,
            "epsilon": args.epsilon,
            "t": args.t,
            "n": args.n,
        });
        write_json(out, &bounds)?;
        ManifestBuilder::new("predict", args.common.seed, threads, resolved)
            .write(out, std::slice::from_ref(out))?;
    }
    Ok(())
}
