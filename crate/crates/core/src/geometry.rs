//! Subspace sampling and the linear maps between a plane and ambient space.
//!
//! A [`Subspace`] is a k-dimensional linear subspace of `R^d`, stored as a
//! `d×k` matrix with orthonormal columns. Two sampling families are provided:
//!
//! - [`sample_uniform`]: the rotation-invariant distribution over all
//!   k-planes, realized as a Gaussian matrix orthonormalized column by column
//!   (Gram-Schmidt keeps the triangular factor's diagonal positive, which is
//!   the sign convention that makes the law exactly invariant).
//! - [`sample_conditioned`]: the invariant distribution over k-planes
//!   constrained to contain a given nonzero anchor `x`: first basis column
//!   `x/‖x‖`, remaining columns a uniform (k−1)-frame of the orthogonal
//!   complement of `x` (Gaussians projected into the complement are standard
//!   Gaussians there, so the same construction applies).
//!
//! [`sample_conditioned_span_gaussian`] is an alternative anchored
//! construction that spans the plane by the raw anchor plus k−1 raw Gaussian
//! vectors and keeps that (non-orthonormal) spanning matrix as a chart for
//! inner solvers that want to propose steps in spanning coordinates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Max entrywise deviation of `basisᵀ·basis` from the identity.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
/// Relative tolerance for `‖P_η x − x‖ ≤ tol·‖x‖` on anchored planes.
pub const CONTAINMENT_TOL: f64 = 1e-8;
/// Anchors with norm at or below this are treated as zero.
pub const ZERO_ANCHOR_TOL: f64 = 1e-300;
/// Residual norm below which an orthonormalization column is redrawn.
const RANK_RESAMPLE_TOL: f64 = 1e-12;

/// A k-plane in `R^d`, represented by an orthonormal basis.
///
/// Linear, not affine: every subspace contains the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Wraps an explicit basis, validating orthonormality to
    /// [`ORTHONORMALITY_TOL`].
    pub fn from_orthonormal_basis(basis: DMatrix<f64>) -> Result<Self> {
        let (d, k) = basis.shape();
        if k < 1 || k > d {
            return Err(Error::InvalidDimension { d, k });
        }
        let gram = basis.transpose() * &basis;
        for i in 0..k {
            for j in 0..k {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - expect).abs() > ORTHONORMALITY_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "basis is not orthonormal: |G[{i},{j}] - {expect}| = {:e}",
                        (gram[(i, j)] - expect).abs()
                    )));
                }
            }
        }
        Ok(Subspace { basis })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn sub_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Maps plane coordinates to the ambient point `basis·u`.
    ///
    /// An isometry: `‖embed(u)‖ = ‖u‖` up to roundoff.
    pub fn embed(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != self.sub_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.sub_dim(),
                got: u.len(),
            });
        }
        Ok(&self.basis * u)
    }

    /// Coordinates of an ambient vector in the plane's basis, `basisᵀ·x`.
    ///
    /// For `x` inside the plane, `embed(coordinates_of(x))` recovers `x` to
    /// [`CONTAINMENT_TOL`]·‖x‖.
    pub fn coordinates_of(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: x.len(),
            });
        }
        Ok(self.basis.tr_mul(x))
    }

    /// Orthogonal projection of `x` onto the plane.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let coords = self.coordinates_of(x)?;
        self.embed(&coords)
    }

    /// Relative distance `‖P_η x − x‖ / ‖x‖` from `x` to the plane.
    pub fn containment_error(&self, x: &DVector<f64>) -> Result<f64> {
        let p = self.project(x)?;
        let nx = x.norm();
        if nx == 0.0 {
            return Ok(0.0);
        }
        Ok((p - x).norm() / nx)
    }
}

fn standard_normal_vector(d: usize, rng: &mut RngStream) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Orthonormalizes columns `start..` of `q` in place against all earlier
/// columns (modified Gram-Schmidt with one re-orthogonalization pass).
/// Columns from `start` on are expected to hold Gaussian draws; a column
/// whose residual collapses below the rank tolerance is redrawn from `rng`.
fn orthonormalize_tail(q: &mut DMatrix<f64>, start: usize, rng: &mut RngStream) {
    let k = q.ncols();
    for j in start..k {
        loop {
            let mut v = q.column(j).clone_owned();
            for _pass in 0..2 {
                for i in 0..j {
                    let qi = q.column(i);
                    let proj = qi.dot(&v);
                    v.axpy(-proj, &qi, 1.0);
                }
            }
            let norm = v.norm();
            if norm >= RANK_RESAMPLE_TOL {
                v /= norm;
                q.set_column(j, &v);
                break;
            }
            // probability-zero degeneracy: redraw this column
            let fresh = standard_normal_vector(q.nrows(), rng);
            q.set_column(j, &fresh);
        }
    }
}

/// Samples a k-plane from the rotation-invariant distribution on the set of
/// k-planes in `R^d`.
pub fn sample_uniform(d: usize, k: usize, rng: &mut RngStream) -> Result<Subspace> {
    if k < 1 || k > d {
        return Err(Error::InvalidDimension { d, k });
    }
    let mut q = DMatrix::from_fn(d, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    orthonormalize_tail(&mut q, 0, rng);
    Ok(Subspace { basis: q })
}

/// Samples a k-plane containing `x`, invariant under rotations fixing `x`.
///
/// The first basis column is `x/‖x‖`; the rest form a uniform (k−1)-frame of
/// the orthogonal complement of `x`.
pub fn sample_conditioned(x: &DVector<f64>, k: usize, rng: &mut RngStream) -> Result<Subspace> {
    let d = x.len();
    if k < 1 || k > d {
        return Err(Error::InvalidDimension { d, k });
    }
    let norm = x.norm();
    if norm <= ZERO_ANCHOR_TOL {
        return Err(Error::ZeroAnchor { norm });
    }
    let mut q = DMatrix::zeros(d, k);
    q.set_column(0, &(x / norm));
    for j in 1..k {
        let fresh = standard_normal_vector(d, rng);
        q.set_column(j, &fresh);
    }
    orthonormalize_tail(&mut q, 1, rng);
    Ok(Subspace { basis: q })
}

/// An anchored plane carrying the raw spanning matrix it was built from.
///
/// `chart` has the anchor itself as its first column and k−1 raw Gaussian
/// vectors as the rest; `plane` is the orthonormalized span. Solvers that
/// propose steps in spanning coordinates use `chart`; everything else
/// (containment checks, traces) sees `plane`.
#[derive(Debug, Clone)]
pub struct SpannedPlane {
    pub chart: DMatrix<f64>,
    pub plane: Subspace,
}

/// Samples a k-plane containing `x` by spanning it with `x` plus k−1 raw
/// Gaussian vectors, keeping the spanning matrix as a chart.
///
/// The induced distribution over planes matches [`sample_conditioned`]
/// (projecting a standard Gaussian into the complement of `x` leaves it
/// standard Gaussian there); what differs is the chart handed to inner
/// solvers, which is anisotropic and scales with `‖x‖`.
pub fn sample_conditioned_span_gaussian(
    x: &DVector<f64>,
    k: usize,
    rng: &mut RngStream,
) -> Result<SpannedPlane> {
    let d = x.len();
    if k < 1 || k > d {
        return Err(Error::InvalidDimension { d, k });
    }
    let norm = x.norm();
    if norm <= ZERO_ANCHOR_TOL {
        return Err(Error::ZeroAnchor { norm });
    }
    let mut chart = DMatrix::zeros(d, k);
    chart.set_column(0, x);
    let mut q = DMatrix::zeros(d, k);
    q.set_column(0, &(x / norm));
    for j in 1..k {
        loop {
            let g = standard_normal_vector(d, rng);
            // orthonormalize this candidate against accepted columns; redraw
            // (updating the chart too, so chart and plane stay the same span)
            // in the probability-zero degenerate case
            let mut v = g.clone();
            for _pass in 0..2 {
                for i in 0..j {
                    let qi = q.column(i);
                    let proj = qi.dot(&v);
                    v.axpy(-proj, &qi, 1.0);
                }
            }
            let vnorm = v.norm();
            if vnorm >= RANK_RESAMPLE_TOL {
                v /= vnorm;
                chart.set_column(j, &g);
                q.set_column(j, &v);
                break;
            }
        }
    }
    Ok(SpannedPlane {
        chart,
        plane: Subspace { basis: q },
    })
}
