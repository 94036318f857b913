//! `grasswalk verify` — Monte Carlo bound checks on analytic cases.
//!
//! Exits nonzero iff any applicable bound is violated beyond its 3σ Monte
//! Carlo width. Not-applicable outcomes (failed preconditions) are reported
//! but do not fail the run.

use clap::Args;
use serde::Serialize;
use serde_json::json;

use grasswalk::analysis::{
    sin_on_circle, verify_best_of_t, verify_level_set, BestOfTReport, BoundStatus, LevelSetReport,
};
use grasswalk::rng::RngStream;

use crate::io::write_json;
use crate::manifest::ManifestBuilder;
use crate::{CliError, CliResult, Common};

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct VerifyArgs {
    /// Analytic case to verify (sin-circle).
    #[arg(long, default_value = "sin-circle")]
    pub case: String,
    /// Samples for the level-set check.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Clip level α' (default −1, the sin case's minimum: no exceptional set).
    #[arg(long)]
    pub alpha_prime: Option<f64>,
    /// Comma-separated T values for best-of-T checks (e.g. "1,5,32").
    #[arg(long)]
    pub best_of_t: Option<String>,
    /// Trials per best-of-T check.
    #[arg(long, default_value_t = 20_000)]
    pub trials: usize,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    case: String,
    level_set: LevelSetReport,
    best_of_t: Vec<BestOfTReport>,
}

pub fn execute(args: VerifyArgs, threads: Option<usize>) -> CliResult<()> {
    if args.case != "sin-circle" {
        return Err(CliError::Config(format!(
            "unknown case {:?} (available: sin-circle)",
            args.case
        )));
    }
    let t_values: Vec<usize> = match &args.best_of_t {
        None => Vec::new(),
        Some(spec) => spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Config(format!("bad best-of-T value {s:?}")))
            })
            .collect::<CliResult<_>>()?,
    };

    let resolved = json!({
        "case": args.case,
        "samples": args.samples,
        "alpha_prime": args.alpha_prime,
        "best_of_t": t_values,
        "trials": args.trials,
    });
    let manifest = ManifestBuilder::new("verify", args.common.seed, threads, resolved);

    let rng = RngStream::from_seed(args.common.seed);
    let alpha_prime = args.alpha_prime.unwrap_or(-1.0);
    let level_set = verify_level_set(sin_on_circle, alpha_prime, args.samples, &rng.child(0))?;
    println!(
        "level set: delta {:.6}, measure {:.6} vs bound {:.6} (±{:.6}) — {:?}",
        level_set.delta,
        level_set.measure_hat,
        level_set.bound,
        level_set.ci_half_width,
        level_set.status
    );

    let mut best_of_t = Vec::new();
    for (i, t) in t_values.iter().enumerate() {
        let report = verify_best_of_t(
            sin_on_circle,
            *t,
            args.trials,
            args.samples,
            &rng.child(1 + i as u64),
        )?;
        println!(
            "best-of-{t}: rate {:.6} vs bound {:.6} (±{:.6}) — {:?}",
            report.empirical_rate, report.bound, report.ci_half_width, report.status
        );
        best_of_t.push(report);
    }

    let violated = level_set.status == BoundStatus::Violated
        || best_of_t.iter().any(|r| r.status == BoundStatus::Violated);

    let report = VerifyReport {
        case: args.case.clone(),
        level_set,
        best_of_t,
    };
    if let Some(out) = &args.common.out {
        write_json(out, &report)?;
        manifest.write(out, std::slice::from_ref(out))?;
        println!("report written to {}", out.display());
    }

    if violated {
        return Err(CliError::BoundViolated(
            "at least one verified bound failed beyond 3σ".into(),
        ));
    }
    Ok(())
}
