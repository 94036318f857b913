//! The random-subspace walk.
//!
//! Round 1 samples T planes uniformly, solves the restriction of the loss on
//! each from the plane's origin, and keeps the best candidate. Every later
//! round samples T planes through the current iterate and solves from it, so
//! accepted losses never increase: the anchored plane contains the iterate
//! and the inner solver never returns anything worse than its start. The
//! walk stops when a round improves the loss by at most `epsilon_a`, or when
//! the round budget runs out.
//!
//! [`run_coupled`] drives two walks with identical random streams, one on the
//! raw loss and one on its clip `max(ℓ, α')`, and reports the first round at
//! which any evaluated point dipped below `α'` — before that round the two
//! traces are necessarily identical.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    sample_conditioned, sample_conditioned_span_gaussian, sample_uniform, ZERO_ANCHOR_TOL,
};
use crate::objectives::{clip, LossFunction, RestrictedLoss};
use crate::rng::RngStream;
use crate::solvers::InnerSolver;

/// How anchored planes are sampled from round 2 on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionedMode {
    /// Invariant measure on planes through the anchor (the default).
    Invariant,
    /// Plane spanned by the raw anchor plus k−1 raw Gaussian vectors, with
    /// inner solves performed in those (non-orthonormal) spanning
    /// coordinates.
    SpanGaussian,
}

/// Walk parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    /// Subspace dimension k.
    pub k: usize,
    /// Planes sampled per round (T).
    pub samples_per_round: usize,
    /// Stop once a round improves the loss by at most this.
    pub epsilon_a: f64,
    /// Hard cap on executed rounds.
    pub max_rounds: usize,
    /// Master seed; fully determines the walk.
    pub seed: u64,
    /// Start point x₀ (defaults to the origin).
    pub x0: Option<DVector<f64>>,
    pub conditioned_mode: ConditionedMode,
}

impl WalkConfig {
    pub fn new(k: usize) -> Self {
        WalkConfig {
            k,
            samples_per_round: 1,
            epsilon_a: 1e-9,
            max_rounds: 1000,
            seed: 0,
            x0: None,
            conditioned_mode: ConditionedMode::Invariant,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.k < 1 || self.k > dim {
            return Err(Error::InvalidDimension { d: dim, k: self.k });
        }
        if self.samples_per_round < 1 {
            return Err(Error::InvalidArgument(
                "samples_per_round must be ≥ 1".into(),
            ));
        }
        if self.epsilon_a.is_nan() || self.epsilon_a <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "epsilon_a must be positive, got {}",
                self.epsilon_a
            )));
        }
        if self.max_rounds < 1 {
            return Err(Error::InvalidArgument("max_rounds must be ≥ 1".into()));
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: x0.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundFlag {
    /// Round-0 record holding the start point.
    Initial,
    /// Anchor was exactly zero, so the round fell back to uniform sampling.
    UniformFallbackZeroAnchor,
    /// No candidate had a finite loss; the round was a no-op.
    NonFiniteRound,
    /// Best candidate was worse than the current iterate; round kept it.
    NoImprovement,
}

/// One round of the walk.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    /// Iterate after this round.
    pub iterate: DVector<f64>,
    /// Loss at the iterate.
    pub loss: f64,
    /// Restricted minima found in each of the T sampled planes.
    pub per_sample_minima: Vec<f64>,
    /// Index of the winning sample (ties break to the lowest index); absent
    /// for the round-0 record and no-op rounds.
    pub accepted_from_sample: Option<usize>,
    /// Restricted-loss evaluations spent by the inner solver this round.
    pub solver_evals: u64,
    pub flags: Vec<RoundFlag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    /// A round's improvement was positive but at most `epsilon_a`,
    /// or negative (possible in round 1 only).
    EpsilonRule,
    /// `max_rounds` was reached with the improvement still above `epsilon_a`.
    Budget,
    /// A round improved the loss by exactly zero.
    ConvergedExact,
}

/// Full history of a walk: round 0 is the start point, later records are
/// accepted rounds (losses non-increasing from round 1 on).
#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace {
    pub rounds: Vec<RoundRecord>,
    pub termination_reason: TerminationReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkResult {
    pub final_point: DVector<f64>,
    pub final_loss: f64,
    pub rounds_executed: usize,
    /// Ambient loss evaluations across the whole walk (solver calls included).
    pub total_evals: u64,
    pub trace: WalkTrace,
}

/// Counts every evaluation; values pass through untouched.
struct CountingLoss<'a> {
    base: &'a dyn LossFunction,
    count: AtomicU64,
}

impl<'a> CountingLoss<'a> {
    fn new(base: &'a dyn LossFunction) -> Self {
        CountingLoss {
            base,
            count: AtomicU64::new(0),
        }
    }

    fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

impl LossFunction for CountingLoss<'_> {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.base.eval(x)
    }
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn known_optimum(&self) -> Option<f64> {
        self.base.known_optimum()
    }
    fn quadratic_center(&self) -> Option<&DVector<f64>> {
        self.base.quadratic_center()
    }
}

/// Flags any evaluation that dips below a threshold; values pass through.
struct ThresholdMonitor<'a> {
    base: &'a dyn LossFunction,
    threshold: f64,
    hit: AtomicBool,
}

impl<'a> ThresholdMonitor<'a> {
    fn new(base: &'a dyn LossFunction, threshold: f64) -> Self {
        ThresholdMonitor {
            base,
            threshold,
            hit: AtomicBool::new(false),
        }
    }

    fn take_hit(&self) -> bool {
        self.hit.swap(false, Ordering::Relaxed)
    }
}

impl LossFunction for ThresholdMonitor<'_> {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        let v = self.base.eval(x);
        if v < self.threshold {
            self.hit.store(true, Ordering::Relaxed);
        }
        v
    }
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn known_optimum(&self) -> Option<f64> {
        self.base.known_optimum()
    }
    fn quadratic_center(&self) -> Option<&DVector<f64>> {
        self.base.quadratic_center()
    }
}

struct SampleOutcome {
    point: DVector<f64>,
    loss: f64,
    solver_evals: u64,
}

struct WalkEngine<'a> {
    loss: CountingLoss<'a>,
    cfg: &'a WalkConfig,
    solver: &'a dyn InnerSolver,
    stream: RngStream,
    current: DVector<f64>,
    current_loss: f64,
    last_improvement: f64,
    rounds: Vec<RoundRecord>,
    executed: usize,
}

impl<'a> WalkEngine<'a> {
    fn new(
        loss: &'a dyn LossFunction,
        cfg: &'a WalkConfig,
        solver: &'a dyn InnerSolver,
        stream: RngStream,
    ) -> Result<Self> {
        cfg.validate(loss.dim())?;
        let counting = CountingLoss::new(loss);
        let x0 = cfg
            .x0
            .clone()
            .unwrap_or_else(|| DVector::zeros(loss.dim()));
        let loss0 = counting.eval(&x0);
        let rounds = vec![RoundRecord {
            round: 0,
            iterate: x0.clone(),
            loss: loss0,
            per_sample_minima: Vec::new(),
            accepted_from_sample: None,
            solver_evals: 0,
            flags: vec![RoundFlag::Initial],
        }];
        Ok(WalkEngine {
            loss: counting,
            cfg,
            solver,
            stream,
            current: x0,
            current_loss: loss0,
            last_improvement: f64::INFINITY,
            rounds,
            executed: 0,
        })
    }

    fn wants_step(&self) -> bool {
        if self.executed == 0 {
            return true;
        }
        // continue while the last round improved by more than epsilon_a;
        // NaN improvements stop the walk
        self.executed < self.cfg.max_rounds && self.last_improvement > self.cfg.epsilon_a
    }

    /// One sub-solve: sample a plane for this round, minimize the restricted
    /// loss from the anchor (or the plane origin in round 1), and return the
    /// ambient candidate. Stream paths are `[round, sample, 0]` for plane
    /// sampling and `[round, sample, 1]` for the solver.
    fn run_sample(&self, round: usize, t: usize, zero_anchor: bool) -> Result<SampleOutcome> {
        let mut plane_rng = self.stream.descend(&[round as u64, t as u64, 0]);
        let mut solver_rng = self.stream.descend(&[round as u64, t as u64, 1]);
        let d = self.loss.dim();
        let k = self.cfg.k;

        let (restricted, u0) = if round == 1 || zero_anchor {
            let plane = sample_uniform(d, k, &mut plane_rng)?;
            let restricted = RestrictedLoss::new(&self.loss, &plane)?;
            (restricted, DVector::zeros(k))
        } else {
            match self.cfg.conditioned_mode {
                ConditionedMode::Invariant => {
                    let plane = sample_conditioned(&self.current, k, &mut plane_rng)?;
                    let u0 = plane.coordinates_of(&self.current)?;
                    (RestrictedLoss::new(&self.loss, &plane)?, u0)
                }
                ConditionedMode::SpanGaussian => {
                    let sp = sample_conditioned_span_gaussian(&self.current, k, &mut plane_rng)?;
                    // chart's first column is the anchor itself
                    let u0 = DVector::from_fn(k, |i, _| if i == 0 { 1.0 } else { 0.0 });
                    (RestrictedLoss::from_chart(&self.loss, sp.chart)?, u0)
                }
            }
        };

        let outcome = self.solver.solve(&restricted, &u0, &mut solver_rng)?;
        let point = restricted.to_ambient(&outcome.point);
        let loss = self.loss.eval(&point);
        Ok(SampleOutcome {
            point,
            loss,
            solver_evals: outcome.evals,
        })
    }

    fn step(&mut self) -> Result<()> {
        let round = self.executed + 1;
        let zero_anchor = round > 1 && self.current.norm() <= ZERO_ANCHOR_TOL;

        let t_count = self.cfg.samples_per_round;
        let samples: Vec<SampleOutcome> = if t_count > 1 {
            (0..t_count)
                .into_par_iter()
                .map(|t| self.run_sample(round, t, zero_anchor))
                .collect::<Result<Vec<_>>>()?
        } else {
            vec![self.run_sample(round, 0, zero_anchor)?]
        };

        let per_sample_minima: Vec<f64> = samples.iter().map(|s| s.loss).collect();
        let solver_evals: u64 = samples.iter().map(|s| s.solver_evals).sum();
        let mut flags = Vec::new();
        if zero_anchor {
            flags.push(RoundFlag::UniformFallbackZeroAnchor);
        }

        // deterministic argmin over finite candidates, ties to lowest index
        let mut best: Option<(usize, f64)> = None;
        for (idx, s) in samples.iter().enumerate() {
            if s.loss.is_finite() && best.is_none_or(|(_, b)| s.loss < b) {
                best = Some((idx, s.loss));
            }
        }

        let mut accepted_from_sample = None;
        match best {
            None => {
                flags.push(RoundFlag::NonFiniteRound);
            }
            Some((idx, best_loss)) => {
                // round 1 accepts the best-of-T unconditionally; anchored
                // rounds never accept a worsening (the anchor is in every
                // sampled plane, so this only filters embedding roundoff)
                if round == 1 || best_loss <= self.current_loss {
                    self.current = samples[idx].point.clone();
                    self.current_loss = best_loss;
                    accepted_from_sample = Some(idx);
                } else {
                    flags.push(RoundFlag::NoImprovement);
                }
            }
        }

        let prev_loss = self.rounds.last().expect("round 0 exists").loss;
        self.last_improvement = prev_loss - self.current_loss;
        if round > 1 {
            assert!(
                self.current_loss <= prev_loss,
                "monotonicity violated at round {round}: {} -> {}",
                prev_loss,
                self.current_loss
            );
        }

        self.rounds.push(RoundRecord {
            round,
            iterate: self.current.clone(),
            loss: self.current_loss,
            per_sample_minima,
            accepted_from_sample,
            solver_evals,
            flags,
        });
        self.executed = round;
        Ok(())
    }

    fn finish(self) -> WalkResult {
        let reason = if self.last_improvement > self.cfg.epsilon_a {
            TerminationReason::Budget
        } else if self.last_improvement == 0.0 {
            TerminationReason::ConvergedExact
        } else {
            TerminationReason::EpsilonRule
        };
        WalkResult {
            final_point: self.current,
            final_loss: self.current_loss,
            rounds_executed: self.executed,
            total_evals: self.loss.count(),
            trace: WalkTrace {
                rounds: self.rounds,
                termination_reason: reason,
            },
        }
    }
}

/// Runs the walk with the stream derived from `cfg.seed`.
pub fn run_walk(
    loss: &dyn LossFunction,
    cfg: &WalkConfig,
    solver: &dyn InnerSolver,
) -> Result<WalkResult> {
    run_walk_with_stream(loss, cfg, solver, RngStream::from_seed(cfg.seed))
}

/// Runs the walk drawing randomness from an explicit stream (used by studies
/// to give each trial its own stream path).
pub fn run_walk_with_stream(
    loss: &dyn LossFunction,
    cfg: &WalkConfig,
    solver: &dyn InnerSolver,
    stream: RngStream,
) -> Result<WalkResult> {
    let mut engine = WalkEngine::new(loss, cfg, solver, stream)?;
    while engine.wants_step() {
        engine.step()?;
    }
    Ok(engine.finish())
}

/// Outcome of a coupled clipped/unclipped pair of walks.
#[derive(Debug, Clone)]
pub struct CoupledOutcome {
    /// Walk on the raw loss.
    pub base: WalkResult,
    /// Walk on `max(ℓ, α')`.
    pub clipped: WalkResult,
    /// First round at which any evaluated point had `ℓ(x) < α'` (round 0 is
    /// the start-point evaluation). `None` if no evaluation ever dipped, in
    /// which case both traces are identical.
    pub divergence_round: Option<usize>,
}

/// Runs two walks with identical stream paths, one on `loss` and one on
/// `clip(loss, alpha_prime)`.
pub fn run_coupled(
    loss: &dyn LossFunction,
    alpha_prime: f64,
    cfg: &WalkConfig,
    solver: &dyn InnerSolver,
) -> Result<CoupledOutcome> {
    run_coupled_with_stream(loss, alpha_prime, cfg, solver, RngStream::from_seed(cfg.seed))
}

pub fn run_coupled_with_stream(
    loss: &dyn LossFunction,
    alpha_prime: f64,
    cfg: &WalkConfig,
    solver: &dyn InnerSolver,
    stream: RngStream,
) -> Result<CoupledOutcome> {
    let monitor_base = ThresholdMonitor::new(loss, alpha_prime);
    let monitor_clip = ThresholdMonitor::new(loss, alpha_prime);
    let clipped = clip(&monitor_clip, alpha_prime);

    let mut engine_base = WalkEngine::new(&monitor_base, cfg, solver, stream.clone())?;
    let mut engine_clip = WalkEngine::new(&clipped, cfg, solver, stream)?;

    let mut divergence_round = None;
    if monitor_base.take_hit() | monitor_clip.take_hit() {
        divergence_round = Some(0);
    }

    loop {
        let base_active = engine_base.wants_step();
        let clip_active = engine_clip.wants_step();
        if !base_active && !clip_active {
            break;
        }
        if base_active {
            engine_base.step()?;
        }
        if clip_active {
            engine_clip.step()?;
        }
        if divergence_round.is_none() && (monitor_base.take_hit() | monitor_clip.take_hit()) {
            // while no evaluation has dipped the engines are in lockstep,
            // so both are at the same round here
            divergence_round = Some(engine_base.executed.max(engine_clip.executed));
        }
    }

    Ok(CoupledOutcome {
        base: engine_base.finish(),
        clipped: engine_clip.finish(),
        divergence_round,
    })
}
