//! Derivative-free stochastic global optimization by random subspace walks.
//!
//! The walk minimizes a continuous black-box loss `ℓ: R^d → R` by repeatedly
//! sampling random k-dimensional linear subspaces (`k ≪ d`), solving the
//! restriction of the problem to each subspace with a pluggable inner solver,
//! and keeping the best candidate. From the second round on, every sampled
//! plane is constrained to contain the current iterate, so accepted loss
//! values never increase.
//!
//! The crate is organized around the quantities that drive the method:
//!
//! - [`geometry`] — invariant sampling of subspaces (uniform and anchored)
//!   plus the embedding/coordinate maps between a plane and the ambient space.
//! - [`objectives`] — the [`LossFunction`](trait@objectives::LossFunction) contract,
//!   restricted and clipped losses, and built-in problems (quadratic,
//!   Rastrigin, Ackley, the Thomson problem via stereographic projection, and
//!   spiked losses for blind-spot studies).
//! - [`solvers`] — inner solvers for the low-dimensional subproblems; all
//!   honor the monotone contract (never return a point worse than the start).
//! - [`walk`] — the walk driver, its trace, and the coupled clipped/unclipped
//!   runner used by blind-spot studies.
//! - [`analysis`] — Monte Carlo estimators and verifiers for the restricted
//!   minimum function `φ`, the deviation ratio `δ`, the gap parameter `Θ`,
//!   level-set measure bounds, and best-of-T amplification, plus closed-form
//!   convergence-bound arithmetic.
//! - [`bench`](mod@bench) — repeated-trial studies, blind-spot studies, and named
//!   experiment presets.
//!
//! Everything that consumes randomness takes an explicit [`rng::RngStream`];
//! identical seeds and stream paths reproduce results bit for bit.

pub mod analysis;
pub mod bench;
pub mod error;
pub mod geometry;
pub mod objectives;
pub mod rng;
pub mod solvers;
pub mod walk;

pub use error::{Error, Result};
pub use geometry::Subspace;
pub use objectives::LossFunction;
pub use rng::RngStream;
pub use solvers::InnerSolver;
pub use walk::{run_coupled, run_walk, WalkConfig, WalkResult};
