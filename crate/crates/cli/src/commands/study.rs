//! `grasswalk study` — repeated-trial and blind-spot studies.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use grasswalk::bench::{
    named_preset, preset_names, run_blindspot_study, run_study, BlindSpotStudy, Preset,
    StudySummary, TrialStudy,
};
use grasswalk::rng::RngStream;

use crate::config::{self, load, parse_start_mode};
use crate::io::{write_atomic, write_json};
use crate::manifest::ManifestBuilder;
use crate::trace::{to_jsonl, trace_records};
use crate::{CliError, CliResult, Common};

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct StudyArgs {
    /// Named preset (see --list-presets).
    #[arg(long)]
    pub preset: Option<String>,
    /// Print available preset names and exit.
    #[arg(long, default_value_t = false)]
    pub list_presets: bool,

    /// Trial count override.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Success tolerance override.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Round budget override.
    #[arg(long)]
    pub max_rounds: Option<usize>,
    /// Start mode override: fixed | gaussian
    #[arg(long)]
    pub start: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub start_scale: f64,
    /// Clip level override for blind-spot studies.
    #[arg(long)]
    pub alpha_prime: Option<f64>,

    /// Directory for per-trial JSONL traces (trial studies only).
    #[arg(long)]
    pub traces_dir: Option<PathBuf>,

    #[command(flatten)]
    pub common: Common,
}

fn apply_trial_overrides(study: &mut TrialStudy, args: &StudyArgs) -> CliResult<()> {
    if let Some(t) = args.trials {
        study.num_trials = t;
    }
    if let Some(tol) = args.tolerance {
        study.success_tolerance = tol;
    }
    if let Some(rounds) = args.max_rounds {
        study.walk.max_rounds = rounds;
    }
    if let Some(start) = &args.start {
        study.start = parse_start_mode(start, args.start_scale)?;
    }
    Ok(())
}

fn apply_blindspot_overrides(study: &mut BlindSpotStudy, args: &StudyArgs) -> CliResult<()> {
    if let Some(t) = args.trials {
        study.num_trials = t;
    }
    if let Some(rounds) = args.max_rounds {
        study.walk.max_rounds = rounds;
    }
    if let Some(alpha) = args.alpha_prime {
        study.alpha_prime = alpha;
    }
    if let Some(start) = &args.start {
        study.start = parse_start_mode(start, args.start_scale)?;
    }
    Ok(())
}

fn summary_csv(summary: &StudySummary) -> String {
    let mut out = String::from("trial,final_loss,rounds,evals,success\n");
    for r in &summary.records {
        let success = match r.success {
            Some(true) => "1",
            Some(false) => "0",
            None => "na",
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.trial, r.final_loss, r.rounds, r.evals, success
        ));
    }
    out
}

pub fn execute(args: StudyArgs, threads: Option<usize>) -> CliResult<()> {
    if args.list_presets {
        for name in preset_names() {
            println!("{name}");
        }
        return Ok(());
    }

    let file = load(args.common.config.as_deref())?;
    let preset_name = args
        .preset
        .clone()
        .or_else(|| file.study.as_ref().and_then(|s| s.preset.clone()))
        .ok_or_else(|| {
            CliError::Config("no study given: pass --preset or a config file with one".into())
        })?;
    let mut preset = named_preset(&preset_name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown preset {preset_name:?}; try --list-presets"
        ))
    })?;

    // file-level overrides first, then flags (flags win by being applied last
    // through the same setters)
    let merged_args = merge_file_overrides(args, file.study.as_ref());

    let rng = RngStream::from_seed(merged_args.common.seed);
    match &mut preset {
        Preset::Trial(study) => {
            apply_trial_overrides(study, &merged_args)?;
            let resolved = json!({
                "preset": preset_name,
                "problem": study.problem,
                "solver": study.solver,
                "trials": study.num_trials,
                "tolerance": study.success_tolerance,
                "start": study.start,
                "walk": {
                    "k": study.walk.k,
                    "t": study.walk.samples_per_round,
                    "epsilon": study.walk.epsilon_a,
                    "max_rounds": study.walk.max_rounds,
                },
            });
            let manifest =
                ManifestBuilder::new("study", merged_args.common.seed, threads, resolved);
            let outcome = run_study(study, &rng)?;

            match (outcome.summary.success_rate, outcome.summary.success_ci_half_width) {
                (Some(rate), Some(ci)) => println!(
                    "success rate {rate:.4} ± {ci:.4} (3σ) over {} trials; loss median {:.9e}",
                    outcome.summary.trials, outcome.summary.loss_median
                ),
                _ => println!(
                    "{} trials; loss min {:.9e} / median {:.9e} / max {:.9e}",
                    outcome.summary.trials,
                    outcome.summary.loss_min,
                    outcome.summary.loss_median,
                    outcome.summary.loss_max
                ),
            }
            println!(
                "mean rounds {:.2}, mean evaluations {:.1}",
                outcome.summary.mean_rounds, outcome.summary.mean_evals
            );

            let mut outputs = Vec::new();
            if let Some(dir) = &merged_args.traces_dir {
                std::fs::create_dir_all(dir)?;
                for (i, walk) in outcome.walks.iter().enumerate() {
                    let path = dir.join(format!("trial_{i:04}.jsonl"));
                    let records = trace_records(walk, merged_args.common.emit_iterates);
                    write_atomic(&path, to_jsonl(&records)?.as_bytes())?;
                    outputs.push(path);
                }
            }
            if let Some(out) = &merged_args.common.out {
                write_atomic(out, summary_csv(&outcome.summary).as_bytes())?;
                outputs.insert(0, out.clone());
                manifest.write(out, &outputs)?;
                println!("summary written to {}", out.display());
            }
        }
        Preset::BlindSpot(study) => {
            apply_blindspot_overrides(study, &merged_args)?;
            let resolved = json!({
                "preset": preset_name,
                "problem": study.problem,
                "solver": study.solver,
                "trials": study.num_trials,
                "alpha_prime": study.alpha_prime,
                "start": study.start,
                "walk": {
                    "k": study.walk.k,
                    "t": study.walk.samples_per_round,
                    "epsilon": study.walk.epsilon_a,
                    "max_rounds": study.walk.max_rounds,
                },
            });
            let manifest =
                ManifestBuilder::new("study", merged_args.common.seed, threads, resolved);
            let summary = run_blindspot_study(study, &rng)?;
            println!(
                "hit frequency {:.4} ({}/{} trials); max non-hit loss gap {:e}; non-hit traces identical: {}",
                summary.hit_frequency,
                summary.hit_count,
                summary.trials,
                summary.max_nonhit_loss_gap,
                summary.nonhit_traces_identical
            );
            if let Some(out) = &merged_args.common.out {
                write_json(out, &summary)?;
                manifest.write(out, std::slice::from_ref(out))?;
                println!("summary written to {}", out.display());
            }
        }
    }
    Ok(())
}

fn merge_file_overrides(
    mut args: StudyArgs,
    file: Option<&config::StudySection>,
) -> StudyArgs {
    if let Some(section) = file {
        args.trials = args.trials.or(section.trials);
        args.tolerance = args.tolerance.or(section.tolerance);
        args.alpha_prime = args.alpha_prime.or(section.alpha_prime);
        if args.start.is_none() {
            args.start = section.start.clone();
            if let Some(scale) = section.start_scale {
                args.start_scale = scale;
            }
        }
    }
    args
}
