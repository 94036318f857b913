//! Estimators and verifiers for the quantities driving the walk's theory.
//!
//! The restricted minimum function `φ(η) = min_{y∈η} ℓ(y)` is sampled by
//! solving the loss on random planes. From its empirical moments come:
//!
//! - the deviation ratio `δ = (1/√2)·‖φ−φ̄‖₂/(α_max−α_min)`, the per-sample
//!   success parameter ([`estimate_phi_stats`]);
//! - the gap parameter `Θ`, the infimum over anchors of the per-anchor ratio
//!   `‖φ−φ̄‖₂/(max−min)` on planes through the anchor ([`estimate_gap`]);
//! - Monte Carlo checks of the level-set measure bound
//!   ([`verify_level_set`]) and its best-of-T amplification
//!   ([`verify_best_of_t`]);
//! - closed-form evaluation of the convergence-bound arithmetic
//!   ([`predict_bounds`]).
//!
//! All sampled estimates are plug-in values from finite samples: reported
//! extremes are empirical, and the gap estimate is an upper bound on the
//! true infimum (it minimizes over finitely many anchors). Estimator
//! accumulation is two-pass compensated summation over an index-ordered
//! value buffer, so results do not depend on thread count.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sample_conditioned, sample_uniform};
use crate::objectives::{clip, LossFunction, RestrictedLoss};
use crate::rng::RngStream;
use crate::solvers::InnerSolver;

/// Which family of planes to sample `φ` over.
#[derive(Debug, Clone, PartialEq)]
pub enum PlaneFamily {
    /// All k-planes, invariant measure.
    Uniform,
    /// k-planes through a fixed nonzero anchor.
    Conditioned(DVector<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Uniform,
    Conditioned,
}

/// Empirical statistics of `φ` over a sampled plane family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiStats {
    pub family: FamilyKind,
    pub samples: usize,
    pub alpha_min_hat: f64,
    pub alpha_max_hat: f64,
    pub mean_hat: f64,
    /// `√(mean of (φ − mean)²)`.
    pub l2_dev_hat: f64,
    /// `(1/√2)·l2_dev/(max − min)`.
    pub delta_hat: f64,
}

fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

struct Moments {
    min: f64,
    max: f64,
    mean: f64,
    l2_dev_sq: f64,
}

fn moments(values: &[f64]) -> Moments {
    let n = values.len() as f64;
    let mean = kahan_sum(values.iter().copied()) / n;
    let l2_dev_sq = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean))) / n;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    Moments {
        min,
        max,
        mean,
        l2_dev_sq,
    }
}

/// Samples `φ` once: draw a plane for index `i`, solve the restriction, and
/// return the found minimum. Stream paths are `[i, 0]` for the plane and
/// `[i, 1]` for the solver.
fn sample_phi(
    loss: &dyn LossFunction,
    family: &PlaneFamily,
    k: usize,
    solver: &dyn InnerSolver,
    rng: &RngStream,
    i: u64,
) -> Result<f64> {
    let mut plane_rng = rng.descend(&[i, 0]);
    let mut solver_rng = rng.descend(&[i, 1]);
    let (plane, u0) = match family {
        PlaneFamily::Uniform => {
            let plane = sample_uniform(loss.dim(), k, &mut plane_rng)?;
            let u0 = DVector::zeros(k);
            (plane, u0)
        }
        PlaneFamily::Conditioned(anchor) => {
            let plane = sample_conditioned(anchor, k, &mut plane_rng)?;
            let u0 = plane.coordinates_of(anchor)?;
            (plane, u0)
        }
    };
    let restricted = RestrictedLoss::new(&loss, &plane)?;
    let outcome = solver.solve(&restricted, &u0, &mut solver_rng)?;
    Ok(restricted.eval_restricted(&outcome.point))
}

fn phi_values(
    loss: &dyn LossFunction,
    family: &PlaneFamily,
    k: usize,
    num_samples: usize,
    solver: &dyn InnerSolver,
    rng: &RngStream,
) -> Result<Vec<f64>> {
    (0..num_samples as u64)
        .into_par_iter()
        .map(|i| sample_phi(loss, family, k, solver, rng, i))
        .collect()
}

/// Estimates the moments of `φ` and the deviation ratio `δ` over a plane
/// family. Errors if the sampled `φ` is constant (δ is undefined there).
///
/// With an inexact inner solver the sampled values are upward-biased; the
/// statistics are plug-in estimates of the true moments.
pub fn estimate_phi_stats(
    loss: &dyn LossFunction,
    family: &PlaneFamily,
    k: usize,
    num_samples: usize,
    solver: &dyn InnerSolver,
    rng: &RngStream,
) -> Result<PhiStats> {
    if num_samples < 2 {
        return Err(Error::InvalidArgument(
            "phi statistics need at least 2 samples".into(),
        ));
    }
    let values = phi_values(loss, family, k, num_samples, solver, rng)?;
    let m = moments(&values);
    if m.max == m.min {
        return Err(Error::DegenerateStatistics(format!(
            "phi is constant ({}) over the sampled family; delta is undefined",
            m.max
        )));
    }
    let l2_dev = m.l2_dev_sq.sqrt();
    Ok(PhiStats {
        family: match family {
            PlaneFamily::Uniform => FamilyKind::Uniform,
            PlaneFamily::Conditioned(_) => FamilyKind::Conditioned,
        },
        samples: num_samples,
        alpha_min_hat: m.min,
        alpha_max_hat: m.max,
        mean_hat: m.mean,
        l2_dev_hat: l2_dev,
        delta_hat: std::f64::consts::FRAC_1_SQRT_2 * l2_dev / (m.max - m.min),
    })
}

/// How gap-estimate anchors are drawn.
#[derive(Debug, Clone)]
pub enum AnchorSampler {
    /// Standard normal coordinates scaled by `scale`.
    Gaussian { scale: f64 },
    /// Uniform on the sphere of the given radius.
    Sphere { radius: f64 },
    /// Explicit anchors (walk iterates, say).
    Points(Vec<DVector<f64>>),
}

impl AnchorSampler {
    fn draw(&self, dim: usize, index: usize, rng: &RngStream) -> Option<DVector<f64>> {
        match self {
            AnchorSampler::Gaussian { scale } => {
                let mut r = rng.child(index as u64);
                Some(DVector::from_fn(dim, |_, _| {
                    scale * r.sample::<f64, _>(rand_distr::StandardNormal)
                }))
            }
            AnchorSampler::Sphere { radius } => {
                let mut r = rng.child(index as u64);
                loop {
                    let g = DVector::from_fn(dim, |_, _| {
                        r.sample::<f64, _>(rand_distr::StandardNormal)
                    });
                    let norm = g.norm();
                    if norm > 1e-12 {
                        return Some(g * (radius / norm));
                    }
                }
            }
            AnchorSampler::Points(points) => points.get(index).cloned(),
        }
    }
}

/// Per-anchor deviation ratio of `φ` over planes through the anchor.
#[derive(Debug, Clone, Serialize)]
pub struct AnchorRatio {
    pub anchor: Vec<f64>,
    /// `‖φ−φ̄‖₂/(max−min)` over the anchor's conditioned family.
    pub ratio: f64,
}

/// Sampled estimate of the gap parameter.
#[derive(Debug, Clone, Serialize)]
pub struct GapEstimate {
    pub anchors: Vec<AnchorRatio>,
    /// Minimum per-anchor ratio. Minimizing over finitely many anchors makes
    /// this an upper bound on the true infimum, so predictions fed from it
    /// are optimistic.
    pub theta_hat: f64,
    /// Anchors skipped because `φ` was constant over their planes (the
    /// infimum excludes those).
    pub skipped_degenerate: usize,
}

impl GapEstimate {
    /// Per-round success bound `1 − (1 − θ²/2)^T` at the estimate.
    pub fn theta_t_hat(&self, t_samples: usize) -> f64 {
        1.0 - (1.0 - self.theta_hat * self.theta_hat / 2.0).powi(t_samples as i32)
    }
}

/// Estimates the gap parameter by minimizing the per-anchor deviation ratio
/// over sampled anchors.
pub fn estimate_gap(
    loss: &dyn LossFunction,
    k: usize,
    anchor_sampler: &AnchorSampler,
    num_anchors: usize,
    planes_per_anchor: usize,
    solver: &dyn InnerSolver,
    rng: &RngStream,
) -> Result<GapEstimate> {
    if num_anchors < 1 {
        return Err(Error::InvalidArgument("need at least one anchor".into()));
    }
    if planes_per_anchor < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 planes per anchor".into(),
        ));
    }
    let anchor_rng = rng.child(0);
    let phi_rng = rng.child(1);
    let mut anchors = Vec::new();
    let mut skipped = 0usize;
    for i in 0..num_anchors {
        let Some(anchor) = anchor_sampler.draw(loss.dim(), i, &anchor_rng) else {
            break;
        };
        if anchor.norm() <= crate::geometry::ZERO_ANCHOR_TOL {
            skipped += 1;
            continue;
        }
        let family = PlaneFamily::Conditioned(anchor.clone());
        let values = phi_values(loss, &family, k, planes_per_anchor, solver, &phi_rng.child(i as u64))?;
        let m = moments(&values);
        if m.max == m.min {
            skipped += 1;
            continue;
        }
        anchors.push(AnchorRatio {
            anchor: anchor.as_slice().to_vec(),
            ratio: m.l2_dev_sq.sqrt() / (m.max - m.min),
        });
    }
    if anchors.is_empty() {
        return Err(Error::DegenerateStatistics(
            "phi was constant over every sampled anchor's planes".into(),
        ));
    }
    let theta_hat = anchors
        .iter()
        .map(|a| a.ratio)
        .fold(f64::INFINITY, f64::min);
    Ok(GapEstimate {
        anchors,
        theta_hat,
        skipped_degenerate: skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    Holds,
    Violated,
    /// The precondition linking the exceptional-set measure to the variance
    /// failed, so the bound does not apply.
    NotApplicable,
}

/// Monte Carlo check of the level-set measure bound for a sampled function.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetReport {
    pub alpha_prime: f64,
    pub samples: usize,
    pub alpha_min_hat: f64,
    pub alpha_max_hat: f64,
    pub mean_hat: f64,
    /// `‖f−f̄‖²₂` (mean squared deviation).
    pub l2_dev_sq_hat: f64,
    /// Empirical measure of the exceptional set `{f < α'}`.
    pub u_measure_hat: f64,
    pub delta: f64,
    /// `α_max − δ·(α_max − α')`.
    pub threshold: f64,
    /// Empirical measure of `{f ≤ threshold}`.
    pub measure_hat: f64,
    /// `δ²`, the claimed lower bound on the measure.
    pub bound: f64,
    /// Binomial 3σ half-width on `measure_hat`.
    pub ci_half_width: f64,
    pub status: BoundStatus,
}

impl LevelSetReport {
    pub fn holds(&self) -> bool {
        self.status == BoundStatus::Holds
    }
}

/// Samples `f` under its space's invariant measure and checks that values at
/// most `α_max − δ(α_max−α')` occupy measure at least `δ²`, with `δ` computed
/// from the empirical moments and the exceptional-set measure `|{f < α'}|`.
///
/// The bound is declared violated only beyond the 3σ Monte Carlo width; a
/// failed precondition yields [`BoundStatus::NotApplicable`].
pub fn verify_level_set<F>(
    f_sampler: F,
    alpha_prime: f64,
    num_samples: usize,
    rng: &RngStream,
) -> Result<LevelSetReport>
where
    F: Fn(&mut RngStream) -> f64 + Sync,
{
    if num_samples < 2 {
        return Err(Error::InvalidArgument(
            "level-set verification needs at least 2 samples".into(),
        ));
    }
    let values: Vec<f64> = (0..num_samples as u64)
        .into_par_iter()
        .map(|i| f_sampler(&mut rng.child(i)))
        .collect();
    let m = moments(&values);
    if m.max == m.min {
        return Err(Error::DegenerateStatistics(
            "sampled function is constant; its range is degenerate".into(),
        ));
    }
    if alpha_prime >= m.max {
        return Err(Error::InvalidArgument(format!(
            "alpha_prime ({alpha_prime}) must lie below the sampled maximum ({})",
            m.max
        )));
    }

    let range = m.max - m.min;
    let u_count = values.iter().filter(|&&v| v < alpha_prime).count();
    let u_measure = u_count as f64 / num_samples as f64;

    let mut report = LevelSetReport {
        alpha_prime,
        samples: num_samples,
        alpha_min_hat: m.min,
        alpha_max_hat: m.max,
        mean_hat: m.mean,
        l2_dev_sq_hat: m.l2_dev_sq,
        u_measure_hat: u_measure,
        delta: f64::NAN,
        threshold: f64::NAN,
        measure_hat: f64::NAN,
        bound: f64::NAN,
        ci_half_width: f64::NAN,
        status: BoundStatus::NotApplicable,
    };

    // precondition: |U| < ‖f−f̄‖²₂ / (α_max−α_min)²
    if u_measure >= m.l2_dev_sq / (range * range) {
        return Ok(report);
    }

    let gap = m.max - alpha_prime;
    let delta = (0.5 * (m.l2_dev_sq - u_measure * range * range)).sqrt() / gap;
    let threshold = m.max - delta * gap;
    let below = values.iter().filter(|&&v| v <= threshold).count();
    let measure = below as f64 / num_samples as f64;
    let ci = 3.0 * (measure * (1.0 - measure) / num_samples as f64).sqrt();

    report.delta = delta;
    report.threshold = threshold;
    report.measure_hat = measure;
    report.bound = delta * delta;
    report.ci_half_width = ci;
    report.status = if measure >= delta * delta - ci {
        BoundStatus::Holds
    } else {
        BoundStatus::Violated
    };
    Ok(report)
}

/// Monte Carlo check of best-of-T amplification.
#[derive(Debug, Clone, Serialize)]
pub struct BestOfTReport {
    pub t_samples: usize,
    pub trials: usize,
    pub delta_hat: f64,
    pub min_hat: f64,
    pub max_hat: f64,
    /// Success event: min of T draws is at most `min + (1−δ)(max−min)`.
    pub threshold: f64,
    pub empirical_rate: f64,
    /// `1 − (1−δ²)^T`.
    pub bound: f64,
    pub ci_half_width: f64,
    pub status: BoundStatus,
}

impl BestOfTReport {
    pub fn holds(&self) -> bool {
        self.status == BoundStatus::Holds
    }
}

/// Estimates the probability that the best of T independent draws of `f`
/// lands below the `(1−δ)`-level of the range, and compares it against the
/// amplified bound `1 − (1−δ²)^T`. Range and δ come from a calibration pass.
pub fn verify_best_of_t<F>(
    f_sampler: F,
    t_samples: usize,
    trials: usize,
    calibration_samples: usize,
    rng: &RngStream,
) -> Result<BestOfTReport>
where
    F: Fn(&mut RngStream) -> f64 + Sync,
{
    if t_samples < 1 || trials < 1 || calibration_samples < 2 {
        return Err(Error::InvalidArgument(
            "best-of-T verification needs t ≥ 1, trials ≥ 1, calibration ≥ 2".into(),
        ));
    }
    let calib_rng = rng.child(0);
    let values: Vec<f64> = (0..calibration_samples as u64)
        .into_par_iter()
        .map(|i| f_sampler(&mut calib_rng.child(i)))
        .collect();
    let m = moments(&values);
    let range = m.max - m.min;
    if range == 0.0 {
        return Err(Error::DegenerateStatistics(
            "sampled function is constant; its range is degenerate".into(),
        ));
    }
    let delta = std::f64::consts::FRAC_1_SQRT_2 * m.l2_dev_sq.sqrt() / range;
    let threshold = m.min + (1.0 - delta) * range;

    let trial_rng = rng.child(1);
    let successes: usize = (0..trials as u64)
        .into_par_iter()
        .map(|j| {
            let r = trial_rng.child(j);
            let mut best = f64::INFINITY;
            for t in 0..t_samples as u64 {
                let v = f_sampler(&mut r.child(t));
                best = best.min(v);
            }
            usize::from(best - m.min <= (1.0 - delta) * range)
        })
        .sum();

    let rate = successes as f64 / trials as f64;
    let bound = 1.0 - (1.0 - delta * delta).powi(t_samples as i32);
    let ci = 3.0 * (rate * (1.0 - rate) / trials as f64).sqrt();
    Ok(BestOfTReport {
        t_samples,
        trials,
        delta_hat: delta,
        min_hat: m.min,
        max_hat: m.max,
        threshold,
        empirical_rate: rate,
        bound,
        ci_half_width: ci,
        status: if rate >= bound - ci {
            BoundStatus::Holds
        } else {
            BoundStatus::Violated
        },
    })
}

/// Closed-form convergence-bound quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceBounds {
    /// `(1−δ)(1−2^{−1/2}Θ)ⁿ(α_max−α_min)`: bound on the gap after n rounds.
    pub rate_bound: f64,
    /// Rounds within which the ε-rule must fire:
    /// `⌈log(ε/((1−δ)·range))/log(1−2^{−1/2}Θ)⌉ + 1`.
    pub n_predicted: u64,
    /// `(1−(1−δ²)^T)·(1−(1−Θ²/2)^T)ⁿ` at the given T and n.
    pub success_probability: f64,
    /// T making the success probability at least 1/2 (infinite when δ = 0
    /// gives no amplification).
    pub t_for_half: f64,
}

/// Evaluates the convergence-bound arithmetic at explicit parameter values.
pub fn predict_bounds(
    delta: f64,
    theta: f64,
    alpha_range: f64,
    epsilon_a: f64,
    t_samples: usize,
    n_rounds: u64,
) -> Result<ConvergenceBounds> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!(
            "delta must be in [0, 1), got {delta}"
        )));
    }
    if !(theta > 0.0 && theta < std::f64::consts::SQRT_2) {
        return Err(Error::InvalidArgument(format!(
            "theta must be in (0, sqrt(2)), got {theta}"
        )));
    }
    if alpha_range.is_nan() || alpha_range <= 0.0 || epsilon_a.is_nan() || epsilon_a <= 0.0 {
        return Err(Error::InvalidArgument(
            "alpha_range and epsilon_a must be positive".into(),
        ));
    }
    if t_samples < 1 {
        return Err(Error::InvalidArgument("T must be ≥ 1".into()));
    }

    let shrink = 1.0 - std::f64::consts::FRAC_1_SQRT_2 * theta;
    let rate_bound = (1.0 - delta) * shrink.powf(n_rounds as f64) * alpha_range;

    let ratio = (epsilon_a / ((1.0 - delta) * alpha_range)).ln() / shrink.ln();
    let n_predicted = (ratio.ceil() as i64 + 1).max(0) as u64;

    let per_round = 1.0 - (1.0 - theta * theta / 2.0).powi(t_samples as i32);
    let success_probability =
        (1.0 - (1.0 - delta * delta).powi(t_samples as i32)) * per_round.powf(n_rounds as f64);

    let first = if delta == 0.0 {
        // no single-sample success probability to amplify
        f64::INFINITY
    } else {
        (1.0 - std::f64::consts::FRAC_1_SQRT_2).ln() / (1.0 - delta * delta).ln()
    };
    let second = if n_rounds == 0 {
        0.0
    } else {
        (1.0 - 2.0f64.powf(-1.0 / (2.0 * n_rounds as f64))).ln()
            / (1.0 - theta * theta / 2.0).ln()
    };
    let t_for_half = first.max(second).ceil();

    Ok(ConvergenceBounds {
        rate_bound,
        n_predicted,
        success_probability,
        t_for_half,
    })
}

/// Configuration for [`clipped_analysis`].
#[derive(Debug, Clone)]
pub struct ClippedAnalysisConfig {
    pub k: usize,
    pub phi_samples: usize,
    pub anchor_sampler: AnchorSampler,
    pub num_anchors: usize,
    pub planes_per_anchor: usize,
}

/// φ statistics and gap estimate for the clipped loss `max(ℓ, α')`.
#[derive(Debug, Clone, Serialize)]
pub struct ClippedAnalysis {
    pub alpha_prime: f64,
    pub phi: PhiStats,
    pub gap: GapEstimate,
}

/// Runs the φ machinery on the clipped loss, producing the δ and Θ inputs of
/// the blind-spot convergence bound.
///
/// Clipping the loss from below raises every restricted minimum to at least
/// `α'`; a clip level at or above the sampled maximum of φ makes the
/// statistics degenerate, which is reported as an error.
pub fn clipped_analysis(
    loss: &dyn LossFunction,
    alpha_prime: f64,
    cfg: &ClippedAnalysisConfig,
    solver: &dyn InnerSolver,
    rng: &RngStream,
) -> Result<ClippedAnalysis> {
    let clipped = clip(loss, alpha_prime);
    let phi = estimate_phi_stats(
        &clipped,
        &PlaneFamily::Uniform,
        cfg.k,
        cfg.phi_samples,
        solver,
        &rng.child(0),
    )?;
    let gap = estimate_gap(
        &clipped,
        cfg.k,
        &cfg.anchor_sampler,
        cfg.num_anchors,
        cfg.planes_per_anchor,
        solver,
        &rng.child(1),
    )?;
    Ok(ClippedAnalysis {
        alpha_prime,
        phi,
        gap,
    })
}

/// Nonzero iterates of a finished walk, for use as gap-estimate anchors:
/// the anchored rounds condition on exactly these points.
pub fn iterate_anchors(result: &crate::walk::WalkResult) -> AnchorSampler {
    let points = result
        .trace
        .rounds
        .iter()
        .filter(|r| r.round > 0 && r.iterate.norm() > crate::geometry::ZERO_ANCHOR_TOL)
        .map(|r| r.iterate.clone())
        .collect();
    AnchorSampler::Points(points)
}

/// `sin θ` under uniform angle on the circle; the analytic verification case.
pub fn sin_on_circle(rng: &mut RngStream) -> f64 {
    let theta: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
    theta.sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{Quadratic, SpikedLoss};
    use crate::solvers::{ExactQuadratic, ShrinkDescent, ShrinkDescentConfig};

    #[test]
    fn phi_stats_match_the_analytic_line_oracle() {
        // d=2, k=1, ℓ=‖x−e₁‖²: φ(line at angle θ) = sin²θ with θ uniform.
        // E = 1/2, E[(φ−1/2)²] = 1/8, so l2_dev = √(1/8) and δ = 1/4.
        let loss = Quadratic::new(DVector::from_vec(vec![1.0, 0.0]));
        let stats = estimate_phi_stats(
            &loss,
            &PlaneFamily::Uniform,
            1,
            10_000,
            &ExactQuadratic,
            &RngStream::from_seed(61),
        )
        .unwrap();
        assert!(stats.alpha_min_hat >= 0.0 && stats.alpha_min_hat < 0.01);
        assert!(stats.alpha_max_hat > 0.99 && stats.alpha_max_hat <= 1.0);
        assert!((stats.mean_hat - 0.5).abs() < 0.02);
        assert!((stats.l2_dev_hat - (1.0f64 / 8.0).sqrt()).abs() < 0.02);
        assert!((stats.delta_hat - 0.25).abs() < 0.02);
    }

    #[test]
    fn constant_phi_is_a_degenerate_error() {
        // every linear plane contains the origin, so φ ≡ 0 for ‖x‖²
        let loss = Quadratic::origin(4);
        let err = estimate_phi_stats(
            &loss,
            &PlaneFamily::Uniform,
            2,
            100,
            &ExactQuadratic,
            &RngStream::from_seed(62),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateStatistics(_)));
    }

    #[test]
    fn single_point_conditioned_family_is_degenerate() {
        // G_{1,2,x} is a single line, so φ is constant over the family
        let loss = Quadratic::new(DVector::from_vec(vec![1.0, 0.0]));
        let anchor = DVector::from_vec(vec![0.0, 1.0]);
        let err = estimate_phi_stats(
            &loss,
            &PlaneFamily::Conditioned(anchor),
            1,
            64,
            &ExactQuadratic,
            &RngStream::from_seed(63),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateStatistics(_)));
    }

    #[test]
    fn delta_hat_stays_in_range() {
        // an off-center quadratic keeps φ nonconstant; the noisy solver adds
        // its own spread on top
        let loss = Quadratic::new(DVector::from_vec(vec![2.0, -1.0, 0.5, 0.0, 1.0]));
        let shrink = ShrinkDescent::new(ShrinkDescentConfig::default()).unwrap();
        let stats = estimate_phi_stats(
            &loss,
            &PlaneFamily::Uniform,
            2,
            300,
            &shrink,
            &RngStream::from_seed(64),
        )
        .unwrap();
        assert!(stats.delta_hat >= 0.0 && stats.delta_hat <= std::f64::consts::FRAC_1_SQRT_2);
        assert!(stats.alpha_min_hat <= stats.mean_hat && stats.mean_hat <= stats.alpha_max_hat);
    }

    #[test]
    fn gap_ratios_match_dense_integration_oracle() {
        // ‖x−c‖² in d=3, k=2: a 2-plane through x has unit normal ν ⊥ x, and
        // φ = (c·ν)². Dense sampling of the normal circle gives the oracle.
        let c = DVector::from_vec(vec![0.7, -0.3, 0.5]);
        let loss = Quadratic::new(c.clone());
        let anchors: Vec<DVector<f64>> = vec![
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
            DVector::from_vec(vec![0.6, 0.0, 0.8]),
            DVector::from_vec(vec![-0.5, 0.7, 0.5]),
        ];
        let estimate = estimate_gap(
            &loss,
            2,
            &AnchorSampler::Points(anchors.clone()),
            anchors.len(),
            4000,
            &ExactQuadratic,
            &RngStream::from_seed(65),
        )
        .unwrap();
        assert_eq!(estimate.anchors.len(), anchors.len());

        for (i, anchor) in anchors.iter().enumerate() {
            // orthonormal basis {a, b} of the plane normal to the anchor
            let a = {
                let mut v = DVector::from_vec(vec![1.0, 0.0, 0.0]);
                let x = anchor / anchor.norm();
                v -= &x * x.dot(&v);
                if v.norm() < 1e-6 {
                    v = DVector::from_vec(vec![0.0, 1.0, 0.0]);
                    v -= &x * x.dot(&v);
                }
                let n = v.norm();
                v / n
            };
            let b = {
                let x = anchor / anchor.norm();
                DVector::from_vec(vec![
                    x[1] * a[2] - x[2] * a[1],
                    x[2] * a[0] - x[0] * a[2],
                    x[0] * a[1] - x[1] * a[0],
                ])
            };
            let grid = 2_000_000usize;
            let phis: Vec<f64> = (0..grid)
                .map(|j| {
                    let t = std::f64::consts::PI * j as f64 / grid as f64;
                    let nu = &a * t.cos() + &b * t.sin();
                    c.dot(&nu).powi(2)
                })
                .collect();
            let m = moments(&phis);
            let oracle = m.l2_dev_sq.sqrt() / (m.max - m.min);
            let got = estimate.anchors[i].ratio;
            assert!(
                (got - oracle).abs() < 0.03,
                "anchor {i}: {got} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn gap_estimate_on_constant_loss_errors() {
        struct Constant;
        impl LossFunction for Constant {
            fn eval(&self, _: &DVector<f64>) -> f64 {
                3.0
            }
            fn dim(&self) -> usize {
                4
            }
        }
        let shrink = ShrinkDescent::new(ShrinkDescentConfig::default()).unwrap();
        let err = estimate_gap(
            &Constant,
            2,
            &AnchorSampler::Gaussian { scale: 1.0 },
            4,
            16,
            &shrink,
            &RngStream::from_seed(66),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateStatistics(_)));
    }

    #[test]
    fn theta_t_is_monotone_in_t() {
        let estimate = GapEstimate {
            anchors: vec![],
            theta_hat: 0.3,
            skipped_degenerate: 0,
        };
        let mut prev = 0.0;
        for t in 1..=64 {
            let cur = estimate.theta_t_hat(t);
            assert!(cur >= prev && cur <= 1.0);
            prev = cur;
        }
        assert!(prev > estimate.theta_t_hat(1));
    }

    #[test]
    fn level_set_sin_case_with_alpha_at_minimum() {
        let report = verify_level_set(sin_on_circle, -1.0, 100_000, &RngStream::from_seed(67))
            .unwrap();
        assert!((report.delta - 0.25).abs() < 0.01);
        assert!((report.threshold - 0.5).abs() < 0.02);
        assert!((report.measure_hat - 2.0 / 3.0).abs() < 0.01);
        assert!(report.bound <= 0.0655 && report.bound >= 0.0595);
        assert!(report.holds());
        assert_eq!(report.u_measure_hat, 0.0);
    }

    #[test]
    fn level_set_sin_case_with_exceptional_set() {
        let report = verify_level_set(sin_on_circle, -0.99, 100_000, &RngStream::from_seed(68))
            .unwrap();
        // closed forms: |U| ≈ 0.04505, δ ≈ 0.2009, measure ≈ 0.7049
        assert!((report.u_measure_hat - 0.04505).abs() < 0.005);
        assert!((report.delta - 0.2009).abs() < 0.01);
        assert!((report.measure_hat - 0.7049).abs() < 0.01);
        assert!(report.holds());
    }

    #[test]
    fn level_set_precondition_failure_is_not_applicable() {
        // α' = 0.5 puts 70% of the mass in the exceptional set
        let report = verify_level_set(sin_on_circle, 0.5, 20_000, &RngStream::from_seed(69))
            .unwrap();
        assert_eq!(report.status, BoundStatus::NotApplicable);
        assert!(report.delta.is_nan());
    }

    #[test]
    fn level_set_constant_function_errors() {
        let err =
            verify_level_set(|_| 1.0, 0.5, 100, &RngStream::from_seed(70)).unwrap_err();
        assert!(matches!(err, Error::DegenerateStatistics(_)));
    }

    #[test]
    fn best_of_t_amplification_on_the_sin_case() {
        // per-draw success probability is 2/3; empirical rate ≈ 1−(1/3)^T
        for (t, expect) in [(1usize, 2.0 / 3.0), (5, 1.0 - (1.0f64 / 3.0).powi(5))] {
            let report = verify_best_of_t(
                sin_on_circle,
                t,
                20_000,
                100_000,
                &RngStream::from_seed(71),
            )
            .unwrap();
            assert!(
                (report.empirical_rate - expect).abs() < 0.02,
                "T={t}: rate {} vs {expect}",
                report.empirical_rate
            );
            assert!(report.empirical_rate >= report.bound - report.ci_half_width);
            assert!(report.holds());
        }
        let report = verify_best_of_t(
            sin_on_circle,
            32,
            20_000,
            100_000,
            &RngStream::from_seed(72),
        )
        .unwrap();
        assert!(report.empirical_rate >= 0.999);
        assert!(report.holds());
    }

    #[test]
    fn predict_bounds_reproduces_hand_derived_cases() {
        // δ=0, range 1, ε=1e-3, Θ=√2·0.1 → shrink factor 0.9 → n = 67
        let b = predict_bounds(0.0, std::f64::consts::SQRT_2 * 0.1, 1.0, 1e-3, 5, 10).unwrap();
        assert_eq!(b.n_predicted, 67);

        // n = 0: empty product
        let b0 = predict_bounds(0.3, 0.5, 2.0, 1e-3, 5, 0).unwrap();
        assert_eq!(b0.rate_bound, (1.0 - 0.3) * 2.0);

        // Θ → √2 kills the rate bound for n ≥ 1
        let bt = predict_bounds(0.0, std::f64::consts::SQRT_2 - 1e-12, 1.0, 1e-3, 5, 1).unwrap();
        assert!(bt.rate_bound < 1e-11);
    }

    #[test]
    fn predict_bounds_rejects_out_of_range_parameters() {
        assert!(predict_bounds(-0.1, 0.5, 1.0, 1e-3, 5, 1).is_err());
        assert!(predict_bounds(1.0, 0.5, 1.0, 1e-3, 5, 1).is_err());
        assert!(predict_bounds(0.0, 0.0, 1.0, 1e-3, 5, 1).is_err());
        assert!(predict_bounds(0.0, 1.5, 1.0, 1e-3, 5, 1).is_err());
        assert!(predict_bounds(0.0, 0.5, 0.0, 1e-3, 5, 1).is_err());
        assert!(predict_bounds(0.0, 0.5, 1.0, 0.0, 5, 1).is_err());
        assert!(predict_bounds(0.0, 0.5, 1.0, 1e-3, 0, 1).is_err());
    }

    #[test]
    fn clip_below_the_minimum_changes_nothing() {
        // k = 2 in d = 3 keeps the anchored families nondegenerate (a circle
        // of planes through each anchor)
        let loss = Quadratic::new(DVector::from_vec(vec![1.0, 0.0, 0.0]));
        let cfg = ClippedAnalysisConfig {
            k: 2,
            phi_samples: 2000,
            anchor_sampler: AnchorSampler::Sphere { radius: 2.0 },
            num_anchors: 3,
            planes_per_anchor: 500,
        };
        let rng = RngStream::from_seed(73);
        let clipped = clipped_analysis(&loss, -5.0, &cfg, &ExactQuadratic, &rng).unwrap();
        let baseline = estimate_phi_stats(
            &loss,
            &PlaneFamily::Uniform,
            2,
            2000,
            &ExactQuadratic,
            &rng.child(0),
        )
        .unwrap();
        assert_eq!(clipped.phi.delta_hat, baseline.delta_hat);
        assert_eq!(clipped.phi.mean_hat, baseline.mean_hat);
    }

    #[test]
    fn clip_above_the_maximum_is_degenerate() {
        let loss = Quadratic::new(DVector::from_vec(vec![1.0, 0.0, 0.0]));
        let cfg = ClippedAnalysisConfig {
            k: 2,
            phi_samples: 2000,
            anchor_sampler: AnchorSampler::Sphere { radius: 2.0 },
            num_anchors: 3,
            planes_per_anchor: 500,
        };
        let err = clipped_analysis(&loss, 10.0, &cfg, &ExactQuadratic, &RngStream::from_seed(74))
            .unwrap_err();
        assert!(matches!(err, Error::DegenerateStatistics(_)));
    }

    #[test]
    fn clipped_phi_equals_pointwise_max_with_exact_solver() {
        // φ for clip(ℓ,α') equals max(φ for ℓ, α') on shared planes
        let loss = Quadratic::new(DVector::from_vec(vec![1.0, 0.0, 0.0]));
        let alpha = 0.3;
        let clipped = clip(&loss, alpha);
        let rng = RngStream::from_seed(75);
        for i in 0..200u64 {
            let raw = sample_phi(
                &loss,
                &PlaneFamily::Uniform,
                2,
                &ExactQuadratic,
                &rng,
                i,
            )
            .unwrap();
            let clp = sample_phi(
                &clipped,
                &PlaneFamily::Uniform,
                2,
                &ExactQuadratic,
                &rng,
                i,
            )
            .unwrap();
            assert!((clp - raw.max(alpha)).abs() <= 1e-12);
        }
    }

    #[test]
    fn spiked_clipped_delta_stays_near_the_unspiked_baseline() {
        let base = Quadratic::new(DVector::from_vec(vec![1.0, 0.0, 0.0]));
        let spike_center = DVector::from_vec(vec![0.5, 0.5, 0.0]);
        let spiked = SpikedLoss::new(&base, spike_center, 1e-3, 2.0).unwrap();
        let shrink = ShrinkDescent::new(ShrinkDescentConfig {
            num_scales: 30,
            proposals_per_scale: 8,
            initial_scale: 2.0,
        })
        .unwrap();
        let rng = RngStream::from_seed(76);
        let baseline = estimate_phi_stats(
            &base,
            &PlaneFamily::Uniform,
            2,
            4000,
            &shrink,
            &rng.child(0),
        )
        .unwrap();
        let cfg = ClippedAnalysisConfig {
            k: 2,
            phi_samples: 4000,
            anchor_sampler: AnchorSampler::Sphere { radius: 2.0 },
            num_anchors: 2,
            planes_per_anchor: 200,
        };
        // α' above the spike floor (−1.x), below the base's typical values
        let clipped = clipped_analysis(&spiked, -0.05, &cfg, &shrink, &rng.child(0)).unwrap();
        assert!(
            (clipped.phi.delta_hat - baseline.delta_hat).abs() < 0.02,
            "spiked-clipped {} vs baseline {}",
            clipped.phi.delta_hat,
            baseline.delta_hat
        );
    }

    #[test]
    fn estimates_do_not_depend_on_the_thread_count() {
        let loss = Quadratic::new(DVector::from_vec(vec![1.0, 0.0]));
        let estimate = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                estimate_phi_stats(
                    &loss,
                    &PlaneFamily::Uniform,
                    1,
                    3000,
                    &ExactQuadratic,
                    &RngStream::from_seed(101),
                )
                .unwrap()
            })
        };
        let single = estimate(1);
        let multi = estimate(4);
        assert_eq!(single, multi);
    }

    #[test]
    fn walk_iterates_serve_as_gap_anchors() {
        let loss = Quadratic::new(DVector::from_vec(vec![1.0, 0.5, 0.0]));
        let mut cfg = crate::walk::WalkConfig::new(2);
        cfg.seed = 99;
        cfg.max_rounds = 6;
        cfg.x0 = Some(DVector::from_vec(vec![2.0, -1.0, 0.3]));
        let shrink = ShrinkDescent::new(ShrinkDescentConfig::default()).unwrap();
        let result = crate::walk::run_walk(&loss, &cfg, &shrink).unwrap();
        let sampler = iterate_anchors(&result);
        let AnchorSampler::Points(points) = &sampler else {
            panic!()
        };
        assert_eq!(points.len(), result.rounds_executed);
        let estimate = estimate_gap(
            &loss,
            2,
            &sampler,
            points.len(),
            200,
            &ExactQuadratic,
            &RngStream::from_seed(100),
        )
        .unwrap();
        assert!(estimate.theta_hat > 0.0 && estimate.theta_hat <= 1.0);
    }

    #[test]
    fn phi_minimum_bridges_to_the_global_minimum_for_centered_quadratics() {
        let loss = Quadratic::origin(6);
        let rng = RngStream::from_seed(77);
        let mut min_phi = f64::INFINITY;
        for i in 0..500u64 {
            let v = sample_phi(&loss, &PlaneFamily::Uniform, 3, &ExactQuadratic, &rng, i).unwrap();
            min_phi = min_phi.min(v);
        }
        assert!(min_phi.abs() <= 1e-9);
    }
}
