//! `grasswalk gap` — φ statistics, gap estimation, clipped analysis.

use clap::Args;
use serde::Serialize;
use serde_json::json;

use grasswalk::analysis::{
    clipped_analysis, estimate_gap, estimate_phi_stats, AnchorSampler, ClippedAnalysis,
    ClippedAnalysisConfig, GapEstimate, PhiStats, PlaneFamily,
};
use grasswalk::rng::RngStream;

use crate::config::{self, load};
use crate::io::write_json;
use crate::manifest::ManifestBuilder;
use crate::{CliResult, Common};

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct GapArgs {
    #[command(flatten)]
    pub problem: config::ProblemFlags,

    /// Subspace dimension.
    #[arg(long)]
    pub k: Option<usize>,
    /// Planes sampled for the φ statistics.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Anchors for the gap estimate.
    #[arg(long, default_value_t = 8)]
    pub anchors: usize,
    #[arg(long, default_value_t = 256)]
    pub planes_per_anchor: usize,
    /// Anchor distribution scale (standard normal × scale).
    #[arg(long, default_value_t = 1.0)]
    pub anchor_scale: f64,
    /// Amplification T used when reporting the per-round success bound.
    #[arg(long = "t", alias = "T", default_value_t = 1)]
    pub t: usize,
    /// Also analyze the loss clipped from below at this level.
    #[arg(long)]
    pub clip: Option<f64>,

    /// shrink | nelder-mead | exact-quadratic
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub initial_scale: Option<f64>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Serialize)]
struct GapReport {
    phi: PhiStats,
    gap: GapEstimate,
    theta_t_hat: f64,
    t_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    clipped: Option<ClippedAnalysis>,
}

pub fn execute(args: GapArgs, threads: Option<usize>) -> CliResult<()> {
    let file = load(args.common.config.as_deref())?;
    let problem = config::resolve_problem(&args.problem, file.problem.as_ref())?;
    let solver_spec = config::resolve_solver(
        args.solver.as_deref(),
        args.m,
        args.r,
        args.initial_scale,
        file.solver.as_ref(),
    )?;
    let k = args
        .k
        .or(file.walk.as_ref().and_then(|w| w.k))
        .unwrap_or(2);

    let resolved = json!({
        "problem": problem,
        "solver": solver_spec,
        "k": k,
        "samples": args.samples,
        "anchors": args.anchors,
        "planes_per_anchor": args.planes_per_anchor,
        "anchor_scale": args.anchor_scale,
        "clip": args.clip,
        "t": args.t,
    });
    let manifest = ManifestBuilder::new("gap", args.common.seed, threads, resolved);

    let loss = problem.build()?;
    let solver = solver_spec.build()?;
    let rng = RngStream::from_seed(args.common.seed);

    let phi = estimate_phi_stats(
        &loss,
        &PlaneFamily::Uniform,
        k,
        args.samples,
        &solver,
        &rng.child(0),
    )?;
    let sampler = AnchorSampler::Gaussian {
        scale: args.anchor_scale,
    };
    let gap = estimate_gap(
        &loss,
        k,
        &sampler,
        args.anchors,
        args.planes_per_anchor,
        &solver,
        &rng.child(1),
    )?;
    let clipped = match args.clip {
        None => None,
        Some(alpha) => {
            let cfg = ClippedAnalysisConfig {
                k,
                phi_samples: args.samples,
                anchor_sampler: sampler.clone(),
                num_anchors: args.anchors,
                planes_per_anchor: args.planes_per_anchor,
            };
            Some(clipped_analysis(&loss, alpha, &cfg, &solver, &rng.child(2))?)
        }
    };

    println!(
        "delta_hat {:.6} (phi range [{:.6e}, {:.6e}], mean {:.6e})",
        phi.delta_hat, phi.alpha_min_hat, phi.alpha_max_hat, phi.mean_hat
    );
    println!(
        "theta_hat {:.6} over {} anchors ({} degenerate skipped); theta_T(T={}) {:.6}",
        gap.theta_hat,
        gap.anchors.len(),
        gap.skipped_degenerate,
        args.t,
        gap.theta_t_hat(args.t)
    );
    if let Some(c) = &clipped {
        println!(
            "clipped at {}: delta_hat {:.6}, theta_hat {:.6}",
            c.alpha_prime, c.phi.delta_hat, c.gap.theta_hat
        );
    }

    let report = GapReport {
        theta_t_hat: gap.theta_t_hat(args.t),
        t_samples: args.t,
        phi,
        gap,
        clipped,
    };
    if let Some(out) = &args.common.out {
        write_json(out, &report)?;
        manifest.write(out, std::slice::from_ref(out))?;
        println!("report written to {}", out.display());
    }
    Ok(())
}
