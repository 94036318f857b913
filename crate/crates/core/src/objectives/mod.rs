//! Loss functions: the black-box contract, wrappers, and built-in problems.
//!
//! A [`LossFunction`] is a continuous objective `ℓ: R^d → R` queried only
//! through point evaluations. [`RestrictedLoss`] presents the restriction of
//! a loss to a sampled plane in the plane's own coordinates, which is the
//! object inner solvers minimize. [`ClippedLoss`] is the pointwise clip
//! `max(ℓ, α')` used by blind-spot analysis, and [`SpikedLoss`] plants a
//! narrow downward dip of controllable support into any base loss.

mod thomson;

pub use thomson::{stereo, stereo_inv, ThomsonProblem, COINCIDENT_TOL, ENERGY_CAP};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::Subspace;

/// A continuous black-box objective on `R^d`.
///
/// `eval` must be deterministic, total, and safe to call concurrently.
pub trait LossFunction: Sync {
    fn eval(&self, x: &DVector<f64>) -> f64;

    /// Ambient dimension d.
    fn dim(&self) -> usize;

    /// Known global minimum value, for benchmark scoring only. No algorithm
    /// branches on it.
    fn known_optimum(&self) -> Option<f64> {
        None
    }

    /// Center of an exactly solvable quadratic `‖x−c‖²`, if this loss is one,
    /// possibly behind wrappers that preserve restricted argmins. Drives the
    /// closed-form inner solver; everything else ignores it.
    fn quadratic_center(&self) -> Option<&DVector<f64>> {
        None
    }
}

impl<L: LossFunction + ?Sized> LossFunction for &L {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        (**self).eval(x)
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn known_optimum(&self) -> Option<f64> {
        (**self).known_optimum()
    }
    fn quadratic_center(&self) -> Option<&DVector<f64>> {
        (**self).quadratic_center()
    }
}

impl<L: LossFunction + ?Sized> LossFunction for Box<L> {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        (**self).eval(x)
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn known_optimum(&self) -> Option<f64> {
        (**self).known_optimum()
    }
    fn quadratic_center(&self) -> Option<&DVector<f64>> {
        (**self).quadratic_center()
    }
}

/// The restriction of a loss to a plane, in plane coordinates.
///
/// Built from a [`Subspace`], evaluation is `base.eval(basis·u)` on the very
/// same arithmetic path as [`Subspace::embed`]. The chart can instead be a
/// raw (non-orthonormal) spanning matrix for solvers that work in spanning
/// coordinates; [`is_orthonormal`](Self::is_orthonormal) tells them apart.
pub struct RestrictedLoss<'a> {
    base: &'a dyn LossFunction,
    chart: DMatrix<f64>,
    orthonormal: bool,
}

impl<'a> RestrictedLoss<'a> {
    pub fn new(base: &'a dyn LossFunction, plane: &Subspace) -> Result<Self> {
        if base.dim() != plane.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: plane.ambient_dim(),
            });
        }
        Ok(RestrictedLoss {
            base,
            chart: plane.basis().clone(),
            orthonormal: true,
        })
    }

    /// Restriction through an arbitrary full-rank chart matrix (columns span
    /// the plane but need not be orthonormal).
    pub fn from_chart(base: &'a dyn LossFunction, chart: DMatrix<f64>) -> Result<Self> {
        if base.dim() != chart.nrows() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: chart.nrows(),
            });
        }
        Ok(RestrictedLoss {
            base,
            chart,
            orthonormal: false,
        })
    }

    pub fn eval_restricted(&self, u: &DVector<f64>) -> f64 {
        assert_eq!(u.len(), self.chart.ncols(), "restricted point dimension");
        self.base.eval(&(&self.chart * u))
    }

    /// Ambient point for plane coordinates `u`.
    pub fn to_ambient(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.chart * u
    }

    pub fn sub_dim(&self) -> usize {
        self.chart.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.chart.nrows()
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    pub fn chart(&self) -> &DMatrix<f64> {
        &self.chart
    }

    pub fn base(&self) -> &dyn LossFunction {
        self.base
    }
}

/// Pointwise clip from below: `max(ℓ, α')`.
#[derive(Debug, Clone)]
pub struct ClippedLoss<L> {
    base: L,
    clip_level: f64,
}

impl<L: LossFunction> ClippedLoss<L> {
    pub fn clip_level(&self) -> f64 {
        self.clip_level
    }

    pub fn base(&self) -> &L {
        &self.base
    }
}

/// Clips a loss from below at `alpha_prime`.
pub fn clip<L: LossFunction>(base: L, alpha_prime: f64) -> ClippedLoss<L> {
    ClippedLoss {
        base,
        clip_level: alpha_prime,
    }
}

impl<L: LossFunction> LossFunction for ClippedLoss<L> {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        let v = self.base.eval(x);
        if v >= self.clip_level {
            v
        } else {
            self.clip_level
        }
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn known_optimum(&self) -> Option<f64> {
        self.base.known_optimum().map(|m| m.max(self.clip_level))
    }

    fn quadratic_center(&self) -> Option<&DVector<f64>> {
        // clipping from below is a nondecreasing pointwise transform, so the
        // restricted argmin set only grows and still contains the projected
        // center; the closed-form solver stays valid
        self.base.quadratic_center()
    }
}

/// A base loss with a narrow quadratic dip subtracted inside a small ball.
///
/// `eval(x) = base(x) − depth·max(0, 1 − ‖x−c‖/radius)²`: continuous, equal
/// to the base outside the ball, and exactly `base(c) − depth` at the center.
#[derive(Debug, Clone)]
pub struct SpikedLoss<L> {
    base: L,
    center: DVector<f64>,
    radius: f64,
    depth: f64,
}

impl<L: LossFunction> SpikedLoss<L> {
    pub fn new(base: L, center: DVector<f64>, radius: f64, depth: f64) -> Result<Self> {
        if center.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: center.len(),
            });
        }
        if radius.is_nan() || radius <= 0.0 || depth.is_nan() || depth <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "spike radius and depth must be positive (got r={radius}, depth={depth})"
            )));
        }
        Ok(SpikedLoss {
            base,
            center,
            radius,
            depth,
        })
    }

    /// Loss value at the bottom of the dip.
    pub fn floor(&self) -> f64 {
        self.base.eval(&self.center) - self.depth
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }
}

impl<L: LossFunction> LossFunction for SpikedLoss<L> {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        let base = self.base.eval(x);
        let t = 1.0 - (x - &self.center).norm() / self.radius;
        if t > 0.0 {
            base - self.depth * t * t
        } else {
            base
        }
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }
}

/// `‖x − c‖²`, exactly solvable on any plane.
#[derive(Debug, Clone)]
pub struct Quadratic {
    center: DVector<f64>,
}

impl Quadratic {
    pub fn new(center: DVector<f64>) -> Self {
        Quadratic { center }
    }

    /// `‖x‖²` on `R^d`.
    pub fn origin(dim: usize) -> Self {
        Quadratic {
            center: DVector::zeros(dim),
        }
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }
}

impl LossFunction for Quadratic {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        (x - &self.center).norm_squared()
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn known_optimum(&self) -> Option<f64> {
        Some(0.0)
    }

    fn quadratic_center(&self) -> Option<&DVector<f64>> {
        Some(&self.center)
    }
}

/// Rastrigin: `10d + Σ(x_i² − 10·cos(2π x_i))`, global minimum 0 at the origin.
#[derive(Debug, Clone)]
pub struct Rastrigin {
    dim: usize,
}

impl Rastrigin {
    pub fn new(dim: usize) -> Self {
        Rastrigin { dim }
    }
}

impl LossFunction for Rastrigin {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        let tau = std::f64::consts::TAU;
        10.0 * self.dim as f64
            + x.iter()
                .map(|&xi| xi * xi - 10.0 * (tau * xi).cos())
                .sum::<f64>()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn known_optimum(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Ackley: global minimum 0 at the origin.
#[derive(Debug, Clone)]
pub struct Ackley {
    dim: usize,
}

impl Ackley {
    pub fn new(dim: usize) -> Self {
        Ackley { dim }
    }
}

impl LossFunction for Ackley {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        let d = self.dim as f64;
        let tau = std::f64::consts::TAU;
        let sum_sq = x.norm_squared();
        let sum_cos: f64 = x.iter().map(|&xi| (tau * xi).cos()).sum();
        -20.0 * (-0.2 * (sum_sq / d).sqrt()).exp() - (sum_cos / d).exp()
            + 20.0
            + std::f64::consts::E
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn known_optimum(&self) -> Option<f64> {
        Some(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_uniform;
    use crate::rng::RngStream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_vector(d: usize, rng: &mut RngStream) -> DVector<f64> {
        DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn builtins_attain_their_known_optima_at_origin() {
        let zero = DVector::zeros(10);
        assert_eq!(Quadratic::origin(10).eval(&zero), 0.0);
        assert!(Rastrigin::new(10).eval(&zero).abs() < 1e-12);
        assert!(Ackley::new(10).eval(&zero).abs() < 1e-8);
    }

    #[test]
    fn restricted_loss_matches_embed_bit_for_bit() {
        let root = RngStream::from_seed(21);
        let loss = Rastrigin::new(6);
        for i in 0..20u64 {
            let mut rng = root.child(i);
            let plane = sample_uniform(6, 3, &mut rng).unwrap();
            let restricted = RestrictedLoss::new(&loss, &plane).unwrap();
            let u = random_vector(3, &mut rng);
            let via_embed = loss.eval(&plane.embed(&u).unwrap());
            assert_eq!(restricted.eval_restricted(&u).to_bits(), via_embed.to_bits());
        }
    }

    #[test]
    fn clip_is_identity_below_the_minimum() {
        let loss = Quadratic::origin(3);
        let clipped = clip(&loss, -1.0);
        let root = RngStream::from_seed(22);
        for i in 0..50u64 {
            let x = random_vector(3, &mut root.child(i));
            assert_eq!(clipped.eval(&x), loss.eval(&x));
        }
    }

    #[test]
    fn clip_floors_and_agrees_above_the_level() {
        struct Coord;
        impl LossFunction for Coord {
            fn eval(&self, x: &DVector<f64>) -> f64 {
                x[0]
            }
            fn dim(&self) -> usize {
                4
            }
        }
        let clipped = clip(Coord, 0.0);
        let root = RngStream::from_seed(23);
        for i in 0..100u64 {
            let x = random_vector(4, &mut root.child(i));
            let v = clipped.eval(&x);
            assert!(v >= 0.0);
            assert_eq!(v, x[0].max(0.0));
            if x[0] >= 0.0 {
                assert_eq!(v, x[0]);
            }
        }
    }

    #[test]
    fn spike_equals_base_outside_the_ball_and_dips_at_center() {
        let base = Quadratic::origin(5);
        let center = DVector::from_vec(vec![2.0, 0.0, 0.0, 0.0, 0.0]);
        let spiked = SpikedLoss::new(&base, center.clone(), 0.5, 3.0).unwrap();
        assert_eq!(spiked.eval(&center), base.eval(&center) - 3.0);
        assert_eq!(spiked.floor(), 4.0 - 3.0);
        let root = RngStream::from_seed(24);
        for i in 0..200u64 {
            let x = random_vector(5, &mut root.child(i));
            if (&x - &center).norm() >= 0.5 {
                assert_eq!(spiked.eval(&x), base.eval(&x));
            } else {
                assert!(spiked.eval(&x) < base.eval(&x));
            }
        }
    }

    #[test]
    fn spiked_clipped_above_floor_matches_base_outside_ball() {
        let base = Quadratic::origin(3);
        let center = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let spiked = SpikedLoss::new(&base, center.clone(), 1e-2, 5.0).unwrap();
        let clipped = clip(&spiked, -1.0); // above the floor (−4), below base values near 0? base ≥ 0 > −1
        let root = RngStream::from_seed(25);
        for i in 0..200u64 {
            let x = random_vector(3, &mut root.child(i));
            if (&x - &center).norm() >= 1e-2 {
                assert_eq!(clipped.eval(&x), base.eval(&x));
            }
        }
    }

    #[test]
    fn spike_rejects_bad_parameters() {
        let base = Quadratic::origin(2);
        assert!(SpikedLoss::new(&base, DVector::zeros(3), 1.0, 1.0).is_err());
        assert!(SpikedLoss::new(&base, DVector::zeros(2), 0.0, 1.0).is_err());
        assert!(SpikedLoss::new(&base, DVector::zeros(2), 1.0, -1.0).is_err());
    }

    #[test]
    fn quadratic_center_unwraps_through_clip_but_not_spike() {
        let q = Quadratic::origin(4);
        let c = clip(&q, 0.5);
        assert!(c.quadratic_center().is_some());
        let s = SpikedLoss::new(&q, DVector::zeros(4), 1.0, 1.0).unwrap();
        assert!(s.quadratic_center().is_none());
    }
}
