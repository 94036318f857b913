//! TOML config files and flag/file merging.
//!
//! Sections mirror the library configs; every field is optional and explicit
//! command-line flags win over file values.

use std::path::Path;

use clap::Args;
use serde::Deserialize;

use grasswalk::bench::{ProblemSpec, SolverSpec, StartMode};
use grasswalk::solvers::{NelderMeadConfig, ShrinkDescentConfig};
use grasswalk::walk::{ConditionedMode, WalkConfig};

use crate::{CliError, CliResult};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<ProblemSection>,
    pub walk: Option<WalkSection>,
    pub solver: Option<SolverSection>,
    pub study: Option<StudySection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: Option<String>,
    pub dim: Option<usize>,
    pub center_distance: Option<f64>,
    pub num_points: Option<usize>,
    pub sphere_dim: Option<usize>,
    pub spike_distance: Option<f64>,
    pub spike_radius: Option<f64>,
    pub spike_depth: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSection {
    pub k: Option<usize>,
    pub t: Option<usize>,
    pub epsilon: Option<f64>,
    pub max_rounds: Option<usize>,
    pub conditioned_mode: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub kind: Option<String>,
    pub m: Option<usize>,
    pub r: Option<usize>,
    pub initial_scale: Option<f64>,
    pub max_iters: Option<usize>,
    pub initial_step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub preset: Option<String>,
    pub trials: Option<usize>,
    pub tolerance: Option<f64>,
    pub start: Option<String>,
    pub start_scale: Option<f64>,
    pub alpha_prime: Option<f64>,
}

pub fn load(path: Option<&Path>) -> CliResult<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("invalid config {}: {e}", p.display())))
        }
    }
}

/// Flag value, else file value, else default.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn parse_conditioned_mode(name: &str) -> CliResult<ConditionedMode> {
    match name {
        "invariant" => Ok(ConditionedMode::Invariant),
        "span-gaussian" => Ok(ConditionedMode::SpanGaussian),
        other => Err(CliError::Config(format!(
            "unknown conditioned mode {other:?} (expected invariant | span-gaussian)"
        ))),
    }
}

pub fn parse_start_mode(name: &str, scale: f64) -> CliResult<StartMode> {
    match name {
        "fixed" | "zero" => Ok(StartMode::Fixed),
        "gaussian" => Ok(StartMode::Gaussian { scale }),
        other => Err(CliError::Config(format!(
            "unknown start mode {other:?} (expected fixed | gaussian)"
        ))),
    }
}

/// Problem-selection flags shared by `run` and `gap`.
#[derive(Debug, Args, Clone, Default)]
pub struct ProblemFlags {
    /// quadratic | rastrigin | ackley | thomson | spiked-quadratic
    #[arg(long)]
    pub problem: Option<String>,
    /// Ambient dimension (non-Thomson problems).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Quadratic: distance of the center from the origin (along e₁).
    #[arg(long)]
    pub center_distance: Option<f64>,
    /// Thomson: number of points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Thomson: sphere dimension n (points live on Sⁿ).
    #[arg(long)]
    pub sphere_dim: Option<usize>,
    /// Spiked quadratic: distance of the spike center from the origin.
    #[arg(long)]
    pub spike_distance: Option<f64>,
    #[arg(long)]
    pub spike_radius: Option<f64>,
    #[arg(long)]
    pub spike_depth: Option<f64>,
}

/// Builds the problem from flags merged over the config file.
pub fn resolve_problem(
    flags: &ProblemFlags,
    file: Option<&ProblemSection>,
) -> CliResult<ProblemSpec> {
    let empty = ProblemSection::default();
    let file = file.unwrap_or(&empty);
    let kind = flags
        .problem
        .clone()
        .or_else(|| file.kind.clone())
        .unwrap_or_else(|| "quadratic".to_owned());
    let dim = pick(flags.dim, file.dim, 10);
    match kind.as_str() {
        "quadratic" => Ok(ProblemSpec::Quadratic {
            dim,
            center_distance: pick(flags.center_distance, file.center_distance, 0.0),
        }),
        "rastrigin" => Ok(ProblemSpec::Rastrigin { dim }),
        "ackley" => Ok(ProblemSpec::Ackley { dim }),
        "thomson" => Ok(ProblemSpec::Thomson {
            num_points: pick(flags.points, file.num_points, 5),
            sphere_dim: pick(flags.sphere_dim, file.sphere_dim, 2),
        }),
        "spiked-quadratic" => Ok(ProblemSpec::SpikedQuadratic {
            dim,
            center_distance: pick(flags.spike_distance, file.spike_distance, 0.0),
            radius: pick(flags.spike_radius, file.spike_radius, 0.5),
            depth: pick(flags.spike_depth, file.spike_depth, 1.0),
        }),
        other => Err(CliError::Config(format!(
            "unknown problem {other:?} (expected quadratic | rastrigin | ackley | thomson | spiked-quadratic)"
        ))),
    }
}

pub fn resolve_solver(
    kind: Option<&str>,
    m: Option<usize>,
    r: Option<usize>,
    initial_scale: Option<f64>,
    file: Option<&SolverSection>,
) -> CliResult<SolverSpec> {
    let empty = SolverSection::default();
    let file = file.unwrap_or(&empty);
    let kind = kind
        .map(str::to_owned)
        .or_else(|| file.kind.clone())
        .unwrap_or_else(|| "shrink".to_owned());
    match kind.as_str() {
        "shrink" => Ok(SolverSpec::Shrink(ShrinkDescentConfig {
            num_scales: pick(m, file.m, 20),
            proposals_per_scale: pick(r, file.r, 1),
            initial_scale: pick(initial_scale, file.initial_scale, 1.0),
        })),
        "nelder-mead" => Ok(SolverSpec::NelderMead(NelderMeadConfig {
            max_iters: pick(None, file.max_iters, 400),
            initial_step: pick(initial_scale, file.initial_step, 0.5),
            f_tol: 1e-12,
        })),
        "exact-quadratic" => Ok(SolverSpec::ExactQuadratic),
        other => Err(CliError::Config(format!(
            "unknown solver {other:?} (expected shrink | nelder-mead | exact-quadratic)"
        ))),
    }
}

pub fn resolve_walk(
    seed: u64,
    k: Option<usize>,
    t: Option<usize>,
    epsilon: Option<f64>,
    max_rounds: Option<usize>,
    conditioned_mode: Option<&str>,
    file: Option<&WalkSection>,
) -> CliResult<WalkConfig> {
    let empty = WalkSection::default();
    let file = file.unwrap_or(&empty);
    let mut cfg = WalkConfig::new(pick(k, file.k, 2));
    cfg.samples_per_round = pick(t, file.t, 1);
    cfg.epsilon_a = pick(epsilon, file.epsilon, 1e-9);
    cfg.max_rounds = pick(max_rounds, file.max_rounds, 1000);
    cfg.seed = seed;
    let mode = conditioned_mode
        .map(str::to_owned)
        .or_else(|| file.conditioned_mode.clone());
    if let Some(mode) = mode {
        cfg.conditioned_mode = parse_conditioned_mode(&mode)?;
    }
    Ok(cfg)
}
