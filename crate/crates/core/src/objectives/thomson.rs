//! The Thomson problem as an unconstrained loss via stereographic projection.
//!
//! N points on the unit sphere `S^n ⊂ R^{n+1}` repel by Coulomb potential
//! `Σ_{i<j} 1/‖p_i − p_j‖`. Parameterizing each point by its stereographic
//! preimage in `R^n` turns the constrained sphere problem into a black-box
//! loss on `R^{N·n}`.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::objectives::LossFunction;

/// Projected points closer than this are treated as coincident.
pub const COINCIDENT_TOL: f64 = 1e-15;
/// Energy returned for configurations with coincident points. Finite so that
/// inner solvers can reject such proposals instead of propagating infinities.
pub const ENERGY_CAP: f64 = 1e300;

/// Stereographic projection of `R^n` onto the unit sphere `S^n ⊂ R^{n+1}`:
/// `y ↦ (2y, ‖y‖² − 1)/(1 + ‖y‖²)`.
///
/// Total on `R^n`; the north pole `(0,…,0,1)` is the single unreached point.
pub fn stereo(y: &DVector<f64>) -> DVector<f64> {
    let n = y.len();
    let s = y.norm_squared();
    let denom = 1.0 + s;
    let mut p = DVector::zeros(n + 1);
    for i in 0..n {
        p[i] = 2.0 * y[i] / denom;
    }
    p[n] = (s - 1.0) / denom;
    p
}

/// Inverse stereographic projection: `p ↦ p_{1..n}/(1 − p_{n+1})`.
///
/// Fails at (and numerically near) the north pole.
pub fn stereo_inv(p: &DVector<f64>) -> Result<DVector<f64>> {
    let n = p.len() - 1;
    let denom = 1.0 - p[n];
    if denom.abs() <= 1e-300 {
        return Err(Error::InvalidArgument(
            "inverse stereographic projection is undefined at the north pole".into(),
        ));
    }
    Ok(DVector::from_fn(n, |i, _| p[i] / denom))
}

/// Coulomb energy of N stereographically projected points on `S^n`.
///
/// The input vector is read as N consecutive blocks of length n; coincident
/// projected points yield [`ENERGY_CAP`] and bump the cap counter.
#[derive(Debug)]
pub struct ThomsonProblem {
    num_points: usize,
    sphere_dim: usize,
    cap_hits: AtomicU64,
}

impl ThomsonProblem {
    pub fn new(num_points: usize, sphere_dim: usize) -> Result<Self> {
        if num_points < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 points, got {num_points}"
            )));
        }
        if sphere_dim < 1 {
            return Err(Error::InvalidArgument("sphere dimension must be ≥ 1".into()));
        }
        Ok(ThomsonProblem {
            num_points,
            sphere_dim,
            cap_hits: AtomicU64::new(0),
        })
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn sphere_dim(&self) -> usize {
        self.sphere_dim
    }

    /// How many evaluations returned the coincident-point cap so far.
    pub fn cap_hits(&self) -> u64 {
        self.cap_hits.load(Ordering::Relaxed)
    }

    /// The projected configuration, one point of `S^n` per block of `y`.
    pub fn sphere_points(&self, y: &DVector<f64>) -> Vec<DVector<f64>> {
        let n = self.sphere_dim;
        (0..self.num_points)
            .map(|i| stereo(&y.rows(i * n, n).clone_owned()))
            .collect()
    }

    /// Stereographic preimage of an explicit sphere configuration.
    pub fn from_sphere_points(&self, points: &[DVector<f64>]) -> Result<DVector<f64>> {
        if points.len() != self.num_points {
            return Err(Error::DimensionMismatch {
                expected: self.num_points,
                got: points.len(),
            });
        }
        let n = self.sphere_dim;
        let mut y = DVector::zeros(self.num_points * n);
        for (i, p) in points.iter().enumerate() {
            let yi = stereo_inv(p)?;
            y.rows_mut(i * n, n).copy_from(&yi);
        }
        Ok(y)
    }
}

impl LossFunction for ThomsonProblem {
    fn eval(&self, y: &DVector<f64>) -> f64 {
        let n = self.sphere_dim;
        let m = n + 1;
        let npts = self.num_points;
        debug_assert_eq!(y.len(), npts * n);

        // project every block onto the sphere (flat buffer, one point per row)
        let mut pts = vec![0.0f64; npts * m];
        for i in 0..npts {
            let block = y.rows(i * n, n);
            let s: f64 = block.iter().map(|v| v * v).sum();
            let denom = 1.0 + s;
            for c in 0..n {
                pts[i * m + c] = 2.0 * block[c] / denom;
            }
            pts[i * m + n] = (s - 1.0) / denom;
        }

        let mut energy = 0.0;
        for i in 0..npts {
            for j in (i + 1)..npts {
                let mut d2 = 0.0;
                for c in 0..m {
                    let diff = pts[i * m + c] - pts[j * m + c];
                    d2 += diff * diff;
                }
                let dist = d2.sqrt();
                if dist < COINCIDENT_TOL {
                    self.cap_hits.fetch_add(1, Ordering::Relaxed);
                    return ENERGY_CAP;
                }
                energy += 1.0 / dist;
            }
        }
        energy
    }

    fn dim(&self) -> usize {
        self.num_points * self.sphere_dim
    }

    fn known_optimum(&self) -> Option<f64> {
        crate::bench::thomson_optimum(self.num_points, self.sphere_dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_uniform;
    use crate::rng::RngStream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn stereo_at_origin_hits_south_pole() {
        let p = stereo(&DVector::zeros(2));
        assert_eq!(p.as_slice(), &[0.0, 0.0, -1.0]);
    }

    #[test]
    fn stereo_of_unit_vectors_lands_on_equator() {
        let p = stereo(&DVector::from_vec(vec![0.6, 0.8]));
        assert!(p[2].abs() <= 1e-15);
        assert!((p.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn stereo_of_e1_is_e1() {
        let p = stereo(&DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(p.as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn stereo_output_is_always_unit_norm() {
        let root = RngStream::from_seed(31);
        for i in 0..500u64 {
            let mut rng = root.child(i);
            let n = 1 + (i % 6) as usize;
            // the inverse map loses precision as points crowd the north
            // pole, so keep preimage scales moderate for the round trip
            let scale = 10.0f64.powi((i % 7) as i32 - 4);
            let y = DVector::from_fn(n, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
            let p = stereo(&y);
            assert!((p.norm() - 1.0).abs() <= 1e-12);
            let back = stereo_inv(&p).unwrap();
            assert!((back - &y).norm() <= 1e-9 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn antipodal_pair_has_energy_one_half() {
        let problem = ThomsonProblem::new(2, 2).unwrap();
        // p1 = stereo((1,0)) = (1,0,0); its antipode (−1,0,0) = stereo((−1,0))
        let y = DVector::from_vec(vec![1.0, 0.0, -1.0, 0.0]);
        assert!((problem.eval(&y) - 0.5).abs() <= 1e-15);
    }

    #[test]
    fn equilateral_triangle_energy_is_sqrt_three() {
        let problem = ThomsonProblem::new(3, 2).unwrap();
        let pts = vec![
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![-0.5, 3.0f64.sqrt() / 2.0, 0.0]),
            DVector::from_vec(vec![-0.5, -(3.0f64.sqrt()) / 2.0, 0.0]),
        ];
        let y = problem.from_sphere_points(&pts).unwrap();
        assert!((problem.eval(&y) - 3.0f64.sqrt()).abs() <= 1e-12);
    }

    #[test]
    fn regular_tetrahedron_energy() {
        let problem = ThomsonProblem::new(4, 2).unwrap();
        let s = 1.0 / 3.0f64.sqrt();
        let pts = vec![
            DVector::from_vec(vec![s, s, s]),
            DVector::from_vec(vec![s, -s, -s]),
            DVector::from_vec(vec![-s, s, -s]),
            DVector::from_vec(vec![-s, -s, s]),
        ];
        let y = problem.from_sphere_points(&pts).unwrap();
        // 6 edges of length sqrt(8/3)
        let expected = 6.0 / (8.0f64 / 3.0).sqrt();
        assert!((problem.eval(&y) - expected).abs() <= 1e-12);
        assert!((expected - 3.674_234_6).abs() < 1e-7);
    }

    #[test]
    fn coincident_points_return_the_cap_and_count() {
        let problem = ThomsonProblem::new(3, 2).unwrap();
        let mut y = DVector::zeros(6);
        y[4] = 1.0; // third point elsewhere; first two both at the south pole
        assert_eq!(problem.eval(&y), ENERGY_CAP);
        assert_eq!(problem.cap_hits(), 1);
        problem.eval(&y);
        assert_eq!(problem.cap_hits(), 2);
    }

    #[test]
    fn energy_is_rotation_invariant() {
        let problem = ThomsonProblem::new(5, 2).unwrap();
        let root = RngStream::from_seed(32);
        for i in 0..20u64 {
            let mut rng = root.child(i);
            let y = DVector::from_fn(10, |_, _| rng.sample::<f64, _>(StandardNormal));
            let e1 = problem.eval(&y);
            let rot = sample_uniform(3, 3, &mut rng).unwrap();
            let rotated: Vec<DVector<f64>> = problem
                .sphere_points(&y)
                .iter()
                .map(|p| rot.basis() * p)
                .collect();
            let y2 = problem.from_sphere_points(&rotated).unwrap();
            let e2 = problem.eval(&y2);
            assert!((e1 - e2).abs() <= 1e-9 * e1.max(1.0), "{e1} vs {e2}");
        }
    }
}
