//! Experiment harness: repeated-trial studies, blind-spot studies, presets.
//!
//! A [`TrialStudy`] runs many independent walks on one problem, scoring each
//! trial against the problem's reference optimum; a [`BlindSpotStudy`] runs
//! coupled clipped/unclipped walk pairs and reports how often the walk's
//! evaluations actually entered the clipped region. Trials draw from stream
//! paths `(study seed, trial index, …)`, so summaries are deterministic for
//! a given master seed regardless of how many worker threads run them.

mod thomson_optima;

pub use thomson_optima::thomson_optimum;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{Ackley, LossFunction, Quadratic, Rastrigin, SpikedLoss, ThomsonProblem};
use crate::rng::RngStream;
use crate::solvers::{
    ExactQuadratic, InnerSolver, NelderMead, NelderMeadConfig, ShrinkDescent, ShrinkDescentConfig,
};
use crate::walk::{run_coupled_with_stream, run_walk_with_stream, ConditionedMode, WalkConfig, WalkResult};

/// Problem constructors shared by studies and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemSpec {
    /// `‖x − c‖²` on `R^dim` with `c = center_distance·e₁`.
    Quadratic {
        dim: usize,
        #[serde(default)]
        center_distance: f64,
    },
    Rastrigin { dim: usize },
    Ackley { dim: usize },
    /// Coulomb energy of `num_points` stereographically projected points on
    /// `S^sphere_dim`.
    Thomson { num_points: usize, sphere_dim: usize },
    /// `‖x‖²` with a dip of the given depth inside a ball of the given
    /// radius centered at `center_distance·e₁`.
    SpikedQuadratic {
        dim: usize,
        center_distance: f64,
        radius: f64,
        depth: f64,
    },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Box<dyn LossFunction>> {
        Ok(match *self {
            ProblemSpec::Quadratic {
                dim,
                center_distance,
            } => {
                let mut center = DVector::zeros(dim);
                if dim > 0 {
                    center[0] = center_distance;
                }
                Box::new(Quadratic::new(center))
            }
            ProblemSpec::Rastrigin { dim } => Box::new(Rastrigin::new(dim)),
            ProblemSpec::Ackley { dim } => Box::new(Ackley::new(dim)),
            ProblemSpec::Thomson {
                num_points,
                sphere_dim,
            } => Box::new(ThomsonProblem::new(num_points, sphere_dim)?),
            ProblemSpec::SpikedQuadratic {
                dim,
                center_distance,
                radius,
                depth,
            } => {
                let mut center = DVector::zeros(dim);
                if dim > 0 {
                    center[0] = center_distance;
                }
                Box::new(SpikedLoss::new(Quadratic::origin(dim), center, radius, depth)?)
            }
        })
    }

    pub fn dim(&self) -> usize {
        match *self {
            ProblemSpec::Quadratic { dim, .. }
            | ProblemSpec::Rastrigin { dim }
            | ProblemSpec::Ackley { dim }
            | ProblemSpec::SpikedQuadratic { dim, .. } => dim,
            ProblemSpec::Thomson {
                num_points,
                sphere_dim,
            } => num_points * sphere_dim,
        }
    }
}

/// Inner-solver constructors shared by studies and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SolverSpec {
    Shrink(ShrinkDescentConfig),
    NelderMead(NelderMeadConfig),
    ExactQuadratic,
}

impl SolverSpec {
    pub fn build(&self) -> Result<Box<dyn InnerSolver>> {
        Ok(match self {
            SolverSpec::Shrink(cfg) => Box::new(ShrinkDescent::new(*cfg)?),
            SolverSpec::NelderMead(cfg) => Box::new(NelderMead::new(*cfg)?),
            SolverSpec::ExactQuadratic => Box::new(ExactQuadratic),
        })
    }
}

/// How each trial's start point is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StartMode {
    /// The walk config's start point (the origin by default).
    Fixed,
    /// Independent standard normal coordinates scaled by `scale`.
    Gaussian { scale: f64 },
}

/// A repeated-trial study of one problem/walk/solver combination.
#[derive(Debug, Clone)]
pub struct TrialStudy {
    pub problem: ProblemSpec,
    pub walk: WalkConfig,
    pub solver: SolverSpec,
    pub num_trials: usize,
    /// A trial succeeds when its final loss is within this of the problem's
    /// reference optimum.
    pub success_tolerance: f64,
    pub start: StartMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub final_loss: f64,
    pub rounds: usize,
    pub evals: u64,
    /// Absent when the problem has no reference optimum.
    pub success: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudySummary {
    pub trials: usize,
    pub known_optimum: Option<f64>,
    pub success_tolerance: f64,
    /// Fraction of successful trials; absent without a reference optimum.
    pub success_rate: Option<f64>,
    /// Binomial 3σ half-width on the success rate.
    pub success_ci_half_width: Option<f64>,
    pub loss_min: f64,
    pub loss_median: f64,
    pub loss_max: f64,
    pub mean_rounds: f64,
    pub mean_evals: f64,
    pub records: Vec<TrialRecord>,
}

/// Study results: the summary plus every trial's full walk.
#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub summary: StudySummary,
    pub walks: Vec<WalkResult>,
}

fn trial_start(
    mode: StartMode,
    template: &WalkConfig,
    dim: usize,
    trial_stream: &RngStream,
) -> Option<DVector<f64>> {
    match mode {
        StartMode::Fixed => template.x0.clone(),
        StartMode::Gaussian { scale } => {
            let mut rng = trial_stream.child(0);
            Some(DVector::from_fn(dim, |_, _| {
                scale * rng.sample::<f64, _>(StandardNormal)
            }))
        }
    }
}

/// Runs the study's trials on stream paths `(rng, trial)` and summarizes.
pub fn run_study(study: &TrialStudy, rng: &RngStream) -> Result<StudyOutcome> {
    if study.num_trials < 1 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let loss = study.problem.build()?;
    let solver = study.solver.build()?;
    let dim = loss.dim();

    let walks: Vec<WalkResult> = (0..study.num_trials)
        .into_par_iter()
        .map(|trial| {
            let trial_stream = rng.child(trial as u64);
            let mut cfg = study.walk.clone();
            cfg.x0 = trial_start(study.start, &study.walk, dim, &trial_stream);
            run_walk_with_stream(&loss, &cfg, &solver, trial_stream)
        })
        .collect::<Result<Vec<_>>>()?;

    let known_optimum = loss.known_optimum();
    let records: Vec<TrialRecord> = walks
        .iter()
        .enumerate()
        .map(|(trial, w)| TrialRecord {
            trial,
            final_loss: w.final_loss,
            rounds: w.rounds_executed,
            evals: w.total_evals,
            success: known_optimum.map(|opt| w.final_loss <= opt + study.success_tolerance),
        })
        .collect();

    let mut losses: Vec<f64> = records.iter().map(|r| r.final_loss).collect();
    losses.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = losses.len();
    let (success_rate, success_ci) = match known_optimum {
        Some(_) => {
            let rate = records.iter().filter(|r| r.success == Some(true)).count() as f64
                / n as f64;
            let ci = 3.0 * (rate * (1.0 - rate) / n as f64).sqrt();
            (Some(rate), Some(ci))
        }
        None => (None, None),
    };

    let summary = StudySummary {
        trials: n,
        known_optimum,
        success_tolerance: study.success_tolerance,
        success_rate,
        success_ci_half_width: success_ci,
        loss_min: losses[0],
        loss_median: losses[n / 2],
        loss_max: losses[n - 1],
        mean_rounds: records.iter().map(|r| r.rounds as f64).sum::<f64>() / n as f64,
        mean_evals: records.iter().map(|r| r.evals as f64).sum::<f64>() / n as f64,
        records,
    };
    Ok(StudyOutcome { summary, walks })
}

/// A coupled clipped/unclipped study of a spiked problem.
#[derive(Debug, Clone)]
pub struct BlindSpotStudy {
    pub problem: ProblemSpec,
    pub alpha_prime: f64,
    pub walk: WalkConfig,
    pub solver: SolverSpec,
    pub num_trials: usize,
    pub start: StartMode,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlindSpotTrial {
    pub trial: usize,
    pub divergence_round: Option<usize>,
    pub base_final_loss: f64,
    pub clipped_final_loss: f64,
    /// Max absolute per-round loss gap between the two walks (0 whenever the
    /// trial never hit the clipped region).
    pub max_round_loss_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlindSpotSummary {
    pub trials: usize,
    pub alpha_prime: f64,
    pub hit_count: usize,
    /// Fraction of trials whose walks evaluated a point below `α'`.
    pub hit_frequency: f64,
    /// Max loss gap across all non-hitting trials; 0 when coupling is exact.
    pub max_nonhit_loss_gap: f64,
    /// Whether every non-hitting trial produced bitwise-identical traces.
    pub nonhit_traces_identical: bool,
    pub records: Vec<BlindSpotTrial>,
}

/// Runs coupled walk pairs per trial and summarizes hit behavior.
pub fn run_blindspot_study(study: &BlindSpotStudy, rng: &RngStream) -> Result<BlindSpotSummary> {
    if study.num_trials < 1 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let loss = study.problem.build()?;
    let solver = study.solver.build()?;
    let dim = loss.dim();

    let outcomes: Vec<(BlindSpotTrial, bool)> = (0..study.num_trials)
        .into_par_iter()
        .map(|trial| {
            let trial_stream = rng.child(trial as u64);
            let mut cfg = study.walk.clone();
            cfg.x0 = trial_start(study.start, &study.walk, dim, &trial_stream);
            let outcome =
                run_coupled_with_stream(&loss, study.alpha_prime, &cfg, &solver, trial_stream)?;
            let rounds = outcome
                .base
                .trace
                .rounds
                .len()
                .max(outcome.clipped.trace.rounds.len());
            let mut max_gap = 0.0f64;
            for r in 0..rounds {
                let a = outcome
                    .base
                    .trace
                    .rounds
                    .get(r)
                    .map_or(outcome.base.final_loss, |rec| rec.loss);
                let b = outcome
                    .clipped
                    .trace
                    .rounds
                    .get(r)
                    .map_or(outcome.clipped.final_loss, |rec| rec.loss);
                max_gap = max_gap.max((a - b).abs());
            }
            let identical = outcome.base == outcome.clipped;
            Ok((
                BlindSpotTrial {
                    trial,
                    divergence_round: outcome.divergence_round,
                    base_final_loss: outcome.base.final_loss,
                    clipped_final_loss: outcome.clipped.final_loss,
                    max_round_loss_gap: max_gap,
                },
                identical,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let hit_count = outcomes
        .iter()
        .filter(|(t, _)| t.divergence_round.is_some())
        .count();
    let max_nonhit_loss_gap = outcomes
        .iter()
        .filter(|(t, _)| t.divergence_round.is_none())
        .map(|(t, _)| t.max_round_loss_gap)
        .fold(0.0f64, f64::max);
    let nonhit_traces_identical = outcomes
        .iter()
        .filter(|(t, _)| t.divergence_round.is_none())
        .all(|&(_, identical)| identical);

    Ok(BlindSpotSummary {
        trials: study.num_trials,
        alpha_prime: study.alpha_prime,
        hit_count,
        hit_frequency: hit_count as f64 / study.num_trials as f64,
        max_nonhit_loss_gap,
        nonhit_traces_identical,
        records: outcomes.into_iter().map(|(t, _)| t).collect(),
    })
}

/// A named experiment configuration.
#[derive(Debug, Clone)]
pub enum Preset {
    Trial(TrialStudy),
    BlindSpot(BlindSpotStudy),
}

fn shrink_spec(m: usize, r: usize) -> SolverSpec {
    SolverSpec::Shrink(ShrinkDescentConfig {
        num_scales: m,
        proposals_per_scale: r,
        initial_scale: 1.0,
    })
}

fn thomson_study(
    num_points: usize,
    k: usize,
    m: usize,
    r: usize,
    max_rounds: usize,
) -> TrialStudy {
    let mut walk = WalkConfig::new(k);
    walk.samples_per_round = 1;
    walk.epsilon_a = 1e-9;
    walk.max_rounds = max_rounds;
    TrialStudy {
        problem: ProblemSpec::Thomson {
            num_points,
            sphere_dim: 2,
        },
        walk,
        solver: shrink_spec(m, r),
        num_trials: 50,
        success_tolerance: 1e-3,
        // the zero start projects every point to the same pole, so its
        // capped loss keeps the round-1 stop check from firing early; a
        // random start can lose to round 1's plane-origin solve and stop the
        // walk immediately
        start: StartMode::Fixed,
    }
}

/// All preset names accepted by [`named_preset`].
pub fn preset_names() -> &'static [&'static str] {
    &[
        "quadratic",
        "thomson-n2",
        "thomson-n3",
        "thomson-n4",
        "thomson-n5",
        "blindspot-far",
        "blindspot-center",
        "paper-hpc-42-r7",
        "paper-hpc-120-r4",
    ]
}

/// Builds a named study preset.
///
/// The two `paper-hpc-*` presets are full-scale configurations (hundreds of
/// ambient dimensions, multi-million round budgets); run them with an
/// explicit round cap unless you mean it.
pub fn named_preset(name: &str) -> Option<Preset> {
    match name {
        "quadratic" => {
            let mut walk = WalkConfig::new(2);
            walk.samples_per_round = 1;
            walk.epsilon_a = 1e-9;
            walk.max_rounds = 100;
            Some(Preset::Trial(TrialStudy {
                problem: ProblemSpec::Quadratic {
                    dim: 10,
                    center_distance: 0.0,
                },
                walk,
                solver: shrink_spec(20, 1),
                num_trials: 20,
                success_tolerance: 1e-4,
                start: StartMode::Fixed,
            }))
        }
        "thomson-n2" => Some(Preset::Trial(thomson_study(2, 2, 40, 25, 200))),
        "thomson-n3" => Some(Preset::Trial(thomson_study(3, 3, 40, 25, 250))),
        "thomson-n4" => Some(Preset::Trial(thomson_study(4, 3, 50, 30, 300))),
        "thomson-n5" => Some(Preset::Trial(thomson_study(5, 4, 50, 50, 400))),
        "blindspot-far" => {
            let mut walk = WalkConfig::new(2);
            walk.samples_per_round = 1;
            walk.epsilon_a = 1e-9;
            walk.max_rounds = 120;
            Some(Preset::BlindSpot(BlindSpotStudy {
                problem: ProblemSpec::SpikedQuadratic {
                    dim: 10,
                    center_distance: 10.0,
                    radius: 1e-6,
                    depth: 105.0,
                },
                alpha_prime: -1.0,
                walk,
                solver: shrink_spec(25, 4),
                num_trials: 100,
                start: StartMode::Gaussian { scale: 1.0 },
            }))
        }
        "blindspot-center" => {
            let mut walk = WalkConfig::new(2);
            walk.samples_per_round = 1;
            walk.epsilon_a = 1e-12;
            walk.max_rounds = 150;
            Some(Preset::BlindSpot(BlindSpotStudy {
                problem: ProblemSpec::SpikedQuadratic {
                    dim: 10,
                    center_distance: 0.0,
                    radius: 0.5,
                    depth: 1.0,
                },
                alpha_prime: -0.5,
                walk,
                solver: shrink_spec(25, 4),
                num_trials: 100,
                start: StartMode::Gaussian { scale: 1.0 },
            }))
        }
        "paper-hpc-42-r7" => {
            // 42 points on S⁶ (ambient dimension 252), k = 150, m = 20, T = 1,
            // anchored planes spanned by raw Gaussians
            let mut walk = WalkConfig::new(150);
            walk.samples_per_round = 1;
            walk.epsilon_a = 1e-6;
            walk.max_rounds = 15_000_000;
            walk.conditioned_mode = ConditionedMode::SpanGaussian;
            Some(Preset::Trial(TrialStudy {
                problem: ProblemSpec::Thomson {
                    num_points: 42,
                    sphere_dim: 6,
                },
                walk,
                solver: shrink_spec(20, 1),
                num_trials: 1,
                success_tolerance: 1e-4,
                start: StartMode::Fixed,
            }))
        }
        "paper-hpc-120-r4" => {
            // 120 points on S³ (ambient dimension 360), k = 4, m = 50, T = 1,
            // anchored planes spanned by raw Gaussians
            let mut walk = WalkConfig::new(4);
            walk.samples_per_round = 1;
            walk.epsilon_a = 1e-6;
            walk.max_rounds = 15_000_000;
            walk.conditioned_mode = ConditionedMode::SpanGaussian;
            Some(Preset::Trial(TrialStudy {
                problem: ProblemSpec::Thomson {
                    num_points: 120,
                    sphere_dim: 3,
                },
                walk,
                solver: shrink_spec(50, 1),
                num_trials: 1,
                success_tolerance: 1e-4,
                start: StartMode::Fixed,
            }))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_study_succeeds_in_one_round() {
        let Preset::Trial(mut study) = named_preset("quadratic").unwrap() else {
            panic!("quadratic is a trial preset");
        };
        study.num_trials = 10;
        let outcome = run_study(&study, &RngStream::from_seed(81)).unwrap();
        assert_eq!(outcome.summary.success_rate, Some(1.0));
        assert_eq!(outcome.summary.mean_rounds, 1.0);
        assert_eq!(outcome.summary.loss_max, 0.0);
    }

    #[test]
    fn thomson_pair_study_finds_the_antipodal_optimum() {
        let Preset::Trial(mut study) = named_preset("thomson-n2").unwrap() else {
            panic!("thomson-n2 is a trial preset");
        };
        study.num_trials = 8;
        let outcome = run_study(&study, &RngStream::from_seed(82)).unwrap();
        assert_eq!(outcome.summary.success_rate, Some(1.0));
        for r in &outcome.summary.records {
            assert!((r.final_loss - 0.5).abs() <= 1e-3);
        }
    }

    #[test]
    fn study_summary_is_deterministic() {
        let Preset::Trial(mut study) = named_preset("thomson-n2").unwrap() else {
            panic!();
        };
        study.num_trials = 4;
        let a = run_study(&study, &RngStream::from_seed(83)).unwrap();
        let b = run_study(&study, &RngStream::from_seed(83)).unwrap();
        assert_eq!(a.walks, b.walks);
        assert_eq!(a.summary.records, b.summary.records);
    }

    #[test]
    fn far_spike_is_never_hit() {
        let Preset::BlindSpot(mut study) = named_preset("blindspot-far").unwrap() else {
            panic!();
        };
        study.num_trials = 10;
        let summary = run_blindspot_study(&study, &RngStream::from_seed(84)).unwrap();
        assert_eq!(summary.hit_count, 0);
        assert_eq!(summary.max_nonhit_loss_gap, 0.0);
        assert!(summary.nonhit_traces_identical);
    }

    #[test]
    fn centered_spike_is_always_hit() {
        let Preset::BlindSpot(mut study) = named_preset("blindspot-center").unwrap() else {
            panic!();
        };
        study.num_trials = 10;
        let summary = run_blindspot_study(&study, &RngStream::from_seed(85)).unwrap();
        assert_eq!(summary.hit_count, 10);
        assert!(summary.records.iter().all(|r| r.divergence_round.is_some()));
    }

    #[test]
    fn alpha_below_the_floor_never_diverges() {
        // clip level below the spike floor makes the clip an identity
        let mut walk = WalkConfig::new(2);
        walk.max_rounds = 40;
        let study = BlindSpotStudy {
            problem: ProblemSpec::SpikedQuadratic {
                dim: 6,
                center_distance: 0.0,
                radius: 0.5,
                depth: 1.0,
            },
            alpha_prime: -2.0,
            walk,
            solver: shrink_spec(20, 2),
            num_trials: 6,
            start: StartMode::Gaussian { scale: 1.0 },
        };
        let summary = run_blindspot_study(&study, &RngStream::from_seed(86)).unwrap();
        assert_eq!(summary.hit_count, 0);
        assert!(summary.nonhit_traces_identical);
    }

    #[test]
    fn unknown_optimum_leaves_success_unscored() {
        let mut walk = WalkConfig::new(3);
        walk.max_rounds = 3;
        let study = TrialStudy {
            problem: ProblemSpec::Thomson {
                num_points: 13,
                sphere_dim: 2,
            },
            walk,
            solver: shrink_spec(10, 2),
            num_trials: 2,
            success_tolerance: 1e-3,
            start: StartMode::Gaussian { scale: 1.0 },
        };
        let outcome = run_study(&study, &RngStream::from_seed(87)).unwrap();
        assert_eq!(outcome.summary.success_rate, None);
        assert!(outcome.summary.records.iter().all(|r| r.success.is_none()));
    }

    #[test]
    fn every_preset_name_builds() {
        for name in preset_names() {
            assert!(named_preset(name).is_some(), "{name}");
        }
        assert!(named_preset("nope").is_none());
    }
}
