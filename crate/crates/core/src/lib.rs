//! Differentially private optimization on Riemannian manifolds.
//!
//! The crate privatizes empirical risk minimization over a manifold by adding
//! Gaussian noise *in the tangent space*, calibrated against the Riemannian
//! metric rather than the ambient Euclidean one. It ships:
//!
//! * [`manifold`] — the geometry-agnostic interface (exponential/logarithm
//!   maps, metric, vectorization) plus shared helpers such as the curvature
//!   constant and geodesic running averages;
//! * [`sphere`] — the unit sphere `S^d` with the leading-eigenvector
//!   (PCA) objective;
//! * [`spd`] — symmetric positive definite matrices under the
//!   affine-invariant metric with the Fréchet-mean objective;
//! * [`accounting`] — noise calibration and a moments accountant that
//!   converts per-iteration Rényi bounds into an `(ε, δ)` guarantee;
//! * [`sampling`] — exact and Metropolis–Hastings samplers for the
//!   tangent-space Gaussian, and an intrinsic Laplace sampler on SPD;
//! * [`optimizer`] — DP Riemannian (stochastic) gradient descent with the
//!   theorem-driven stepsize/iteration schedules, three output strategies,
//!   and the two comparison baselines;
//! * [`experiments`] — synthetic data generation, reference solvers,
//!   excess-risk evaluation and a deterministic multi-run harness with
//!   CSV/SVG emission.
//!
//! Start with the runnable programs under `examples/`; each one exercises a
//! single capability end to end.

// Parameter guards are written `!(x > 0.0)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accounting;
pub mod experiments;
pub mod manifold;
pub mod objective;
pub mod optimizer;
pub mod sampling;
pub mod spd;
pub mod sphere;

pub use manifold::{
    curvature_constant, geodesic_average_step, AmbientShape, DomainProfile, Geometry,
    GeometryError, ManifoldDescriptor, ManifoldPoint, TangentVector, Tolerances,
};
