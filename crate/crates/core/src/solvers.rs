//! Inner solvers: the black box that minimizes a loss restricted to a plane.
//!
//! Every solver honors the monotone contract — the returned point is never
//! worse than the start point under the restricted loss — and is
//! deterministic given `(loss, start, stream)`. The walk relies on both.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::RestrictedLoss;
use crate::rng::RngStream;

/// Result of one restricted solve.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    /// Minimizer candidate, in plane coordinates.
    pub point: DVector<f64>,
    /// Restricted-loss evaluations performed.
    pub evals: u64,
}

/// A black-box minimizer for restricted losses.
pub trait InnerSolver: Sync {
    fn solve(
        &self,
        f: &RestrictedLoss<'_>,
        u0: &DVector<f64>,
        rng: &mut RngStream,
    ) -> Result<SolveOutcome>;
}

impl<S: InnerSolver + ?Sized> InnerSolver for &S {
    fn solve(
        &self,
        f: &RestrictedLoss<'_>,
        u0: &DVector<f64>,
        rng: &mut RngStream,
    ) -> Result<SolveOutcome> {
        (**self).solve(f, u0, rng)
    }
}

impl<S: InnerSolver + ?Sized> InnerSolver for Box<S> {
    fn solve(
        &self,
        f: &RestrictedLoss<'_>,
        u0: &DVector<f64>,
        rng: &mut RngStream,
    ) -> Result<SolveOutcome> {
        (**self).solve(f, u0, rng)
    }
}

fn unit_direction(k: usize, rng: &mut RngStream) -> DVector<f64> {
    loop {
        let w = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = w.norm();
        if norm > 1e-12 {
            return w / norm;
        }
    }
}

/// Parameters for [`ShrinkDescent`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkDescentConfig {
    /// Number of scales m; proposals at scale j have length `s₀·2⁻ʲ`.
    pub num_scales: usize,
    /// Proposals per scale r.
    pub proposals_per_scale: usize,
    /// Initial scale s₀.
    pub initial_scale: f64,
}

impl Default for ShrinkDescentConfig {
    fn default() -> Self {
        ShrinkDescentConfig {
            num_scales: 20,
            proposals_per_scale: 1,
            initial_scale: 1.0,
        }
    }
}

/// Random descent over geometrically shrinking step lengths.
///
/// For j = 1..m, r times: propose `u + s₀·2⁻ʲ·w` with `w` uniform on the
/// unit sphere of the plane's coordinates, accepting only strict
/// improvements. Evaluation count is exactly `1 + m·r`.
#[derive(Debug, Clone)]
pub struct ShrinkDescent {
    cfg: ShrinkDescentConfig,
}

impl ShrinkDescent {
    pub fn new(cfg: ShrinkDescentConfig) -> Result<Self> {
        if cfg.num_scales < 1 || cfg.proposals_per_scale < 1 {
            return Err(Error::InvalidArgument(format!(
                "shrink descent needs num_scales ≥ 1 and proposals_per_scale ≥ 1 (got {}, {})",
                cfg.num_scales, cfg.proposals_per_scale
            )));
        }
        if cfg.initial_scale.is_nan() || cfg.initial_scale <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "initial scale must be positive, got {}",
                cfg.initial_scale
            )));
        }
        Ok(ShrinkDescent { cfg })
    }

    pub fn config(&self) -> &ShrinkDescentConfig {
        &self.cfg
    }
}

impl InnerSolver for ShrinkDescent {
    fn solve(
        &self,
        f: &RestrictedLoss<'_>,
        u0: &DVector<f64>,
        rng: &mut RngStream,
    ) -> Result<SolveOutcome> {
        let k = f.sub_dim();
        if u0.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: u0.len(),
            });
        }
        let mut u = u0.clone();
        let mut fu = f.eval_restricted(&u);
        let mut evals = 1u64;
        for j in 1..=self.cfg.num_scales {
            let scale = self.cfg.initial_scale * 0.5f64.powi(j as i32);
            for _ in 0..self.cfg.proposals_per_scale {
                let candidate = &u + unit_direction(k, rng) * scale;
                let fc = f.eval_restricted(&candidate);
                evals += 1;
                if fc < fu {
                    u = candidate;
                    fu = fc;
                }
            }
        }
        Ok(SolveOutcome { point: u, evals })
    }
}

/// Closed-form solver for quadratic losses `‖x − c‖²`.
///
/// On an orthonormal chart B the restricted minimizer is the projected
/// center `Bᵀc`, which makes the restricted minimum function analytic. A
/// test oracle more than a practical solver; errors on anything that is not
/// a quadratic behind argmin-preserving wrappers.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactQuadratic;

impl InnerSolver for ExactQuadratic {
    fn solve(
        &self,
        f: &RestrictedLoss<'_>,
        u0: &DVector<f64>,
        _rng: &mut RngStream,
    ) -> Result<SolveOutcome> {
        if u0.len() != f.sub_dim() {
            return Err(Error::DimensionMismatch {
                expected: f.sub_dim(),
                got: u0.len(),
            });
        }
        if !f.is_orthonormal() {
            return Err(Error::SolverMismatch(
                "exact quadratic solver requires an orthonormal chart".into(),
            ));
        }
        let center = f.base().quadratic_center().ok_or_else(|| {
            Error::SolverMismatch("exact quadratic solver requires a quadratic loss".into())
        })?;
        let projected = f.chart().tr_mul(center);
        let f_new = f.eval_restricted(&projected);
        let f_old = f.eval_restricted(u0);
        if f_new <= f_old {
            Ok(SolveOutcome {
                point: projected,
                evals: 2,
            })
        } else {
            Ok(SolveOutcome {
                point: u0.clone(),
                evals: 2,
            })
        }
    }
}

/// Parameters for [`NelderMead`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadConfig {
    pub max_iters: usize,
    /// Edge length of the initial simplex around the start point.
    pub initial_step: f64,
    /// Stop when the simplex value spread falls below this.
    pub f_tol: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        NelderMeadConfig {
            max_iters: 400,
            initial_step: 0.5,
            f_tol: 1e-12,
        }
    }
}

/// Downhill simplex method, monotone-wrapped.
///
/// Demonstrates that the walk is solver-agnostic; the final point is
/// replaced by the start if it would ever come out worse.
#[derive(Debug, Clone)]
pub struct NelderMead {
    cfg: NelderMeadConfig,
}

impl NelderMead {
    pub fn new(cfg: NelderMeadConfig) -> Result<Self> {
        if cfg.max_iters < 1
            || cfg.initial_step.is_nan()
            || cfg.initial_step <= 0.0
            || cfg.f_tol.is_nan()
            || cfg.f_tol < 0.0
        {
            return Err(Error::InvalidArgument(
                "nelder-mead needs max_iters ≥ 1, initial_step > 0, f_tol ≥ 0".into(),
            ));
        }
        Ok(NelderMead { cfg })
    }
}

impl InnerSolver for NelderMead {
    fn solve(
        &self,
        f: &RestrictedLoss<'_>,
        u0: &DVector<f64>,
        _rng: &mut RngStream,
    ) -> Result<SolveOutcome> {
        let k = f.sub_dim();
        if u0.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: u0.len(),
            });
        }
        let mut evals = 0u64;
        let mut eval = |u: &DVector<f64>| {
            evals += 1;
            f.eval_restricted(u)
        };

        let mut simplex: Vec<(DVector<f64>, f64)> = Vec::with_capacity(k + 1);
        let fu0 = eval(u0);
        simplex.push((u0.clone(), fu0));
        for i in 0..k {
            let mut v = u0.clone();
            v[i] += self.cfg.initial_step;
            let fv = eval(&v);
            simplex.push((v, fv));
        }

        let cmp = |a: &(DVector<f64>, f64), b: &(DVector<f64>, f64)| {
            a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal)
        };

        for _ in 0..self.cfg.max_iters {
            simplex.sort_by(cmp);
            let spread = simplex[k].1 - simplex[0].1;
            // NaN spreads also stop the iteration
            if spread.is_nan() || spread <= self.cfg.f_tol {
                break;
            }

            let mut centroid = DVector::zeros(k);
            for (v, _) in &simplex[..k] {
                centroid += v;
            }
            centroid /= k as f64;

            let worst = simplex[k].clone();
            let reflected = &centroid + (&centroid - &worst.0);
            let fr = eval(&reflected);

            if fr < simplex[0].1 {
                let expanded = &centroid + (&reflected - &centroid) * 2.0;
                let fe = eval(&expanded);
                simplex[k] = if fe < fr {
                    (expanded, fe)
                } else {
                    (reflected, fr)
                };
            } else if fr < simplex[k - 1].1 {
                simplex[k] = (reflected, fr);
            } else {
                let contracted = if fr < worst.1 {
                    &centroid + (&reflected - &centroid) * 0.5
                } else {
                    &centroid + (&worst.0 - &centroid) * 0.5
                };
                let fc = eval(&contracted);
                if fc < worst.1.min(fr) {
                    simplex[k] = (contracted, fc);
                } else {
                    // shrink toward the best vertex
                    let best = simplex[0].0.clone();
                    for entry in simplex.iter_mut().skip(1) {
                        entry.0 = &best + (&entry.0 - &best) * 0.5;
                        entry.1 = eval(&entry.0);
                    }
                }
            }
        }

        simplex.sort_by(cmp);
        let (best, f_best) = simplex.swap_remove(0);
        if f_best <= fu0 {
            Ok(SolveOutcome {
                point: best,
                evals,
            })
        } else {
            Ok(SolveOutcome {
                point: u0.clone(),
                evals,
            })
        }
    }
}
