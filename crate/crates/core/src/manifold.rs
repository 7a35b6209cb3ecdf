//! Geometry-agnostic manifold interface and shared helpers.
//!
//! A [`Geometry`] implements the raw maps (inner product, exponential and
//! logarithm, gradient conversion, vectorization) on plain nalgebra values.
//! [`ManifoldPoint`] and [`TangentVector`] wrap those values together with
//! their geometry, validate the representation invariants on construction,
//! and refuse operations that mix base points.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Validation tolerances. `point` guards representation invariants
/// (unit norm, positive definiteness), `tangent` guards tangency, and
/// `roundtrip` is the budget for exp/log consistency checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub point: f64,
    pub tangent: f64,
    pub roundtrip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            point: 1e-12,
            tangent: 1e-10,
            roundtrip: 1e-8,
        }
    }
}

impl Tolerances {
    /// Single override knob: scale every tolerance by `factor`.
    pub fn scaled(factor: f64) -> Self {
        let base = Self::default();
        Self {
            point: base.point * factor,
            tangent: base.tangent * factor,
            roundtrip: base.roundtrip * factor,
        }
    }
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point violates manifold invariants: {0}")]
    InvalidPoint(String),
    #[error("vector violates tangency invariants: {0}")]
    InvalidTangent(String),
    #[error("operands are attached to different base points")]
    BaseMismatch,
    #[error("operands live on different geometries")]
    GeometryMismatch,
    #[error("logarithm undefined: {0}")]
    LogUndefined(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

/// Raw ambient representation of a geometry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AmbientShape {
    /// Vector of the given length.
    Vector(usize),
    /// Square matrix of the given side.
    Matrix(usize, usize),
}

impl std::fmt::Display for AmbientShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AmbientShape::Vector(n) => write!(f, "vector[{n}]"),
            AmbientShape::Matrix(r, c) => write!(f, "matrix[{r}x{c}]"),
        }
    }
}

/// Static description of a geometry: intrinsic dimension, ambient layout and
/// the injectivity caveat relevant to `log`.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldDescriptor {
    pub intrinsic_dim: usize,
    pub ambient_shape: AmbientShape,
    pub injectivity_note: &'static str,
}

/// Constants describing the optimization domain: diameter, curvature lower
/// bound, metric-tensor lower bound, and the Lipschitz/smoothness/convexity
/// constants used by the stepsize and iteration schedules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainProfile {
    pub diameter: Option<f64>,
    pub kappa_min: Option<f64>,
    pub c_l: f64,
    pub l0: f64,
    pub l1: Option<f64>,
    pub beta: Option<f64>,
    pub tau: Option<f64>,
}

impl DomainProfile {
    /// Minimal profile: geodesic Lipschitz constant and metric lower bound.
    pub fn new(l0: f64, c_l: f64) -> Result<Self, GeometryError> {
        if !(l0 > 0.0) {
            return Err(GeometryError::InvalidArgument(format!(
                "L0 must be positive, got {l0}"
            )));
        }
        if !(c_l > 0.0) {
            return Err(GeometryError::InvalidArgument(format!(
                "c_l must be positive, got {c_l}"
            )));
        }
        Ok(Self {
            diameter: None,
            kappa_min: None,
            c_l,
            l0,
            l1: None,
            beta: None,
            tau: None,
        })
    }

    pub fn with_diameter(mut self, diameter: f64) -> Self {
        self.diameter = Some(diameter);
        self
    }

    pub fn with_kappa_min(mut self, kappa_min: f64) -> Self {
        self.kappa_min = Some(kappa_min);
        self
    }

    pub fn with_smoothness(mut self, l1: f64) -> Self {
        self.l1 = Some(l1);
        self
    }

    pub fn with_strong_convexity(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_pl_constant(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    /// Curvature constant of the domain, requiring `kappa_min` and `diameter`.
    pub fn curvature_constant(&self) -> Result<f64, GeometryError> {
        let kappa = self
            .kappa_min
            .ok_or_else(|| GeometryError::InvalidArgument("profile is missing kappa_min".into()))?;
        let diameter = self
            .diameter
            .ok_or_else(|| GeometryError::InvalidArgument("profile is missing diameter".into()))?;
        curvature_constant(kappa, diameter)
    }
}

/// Distortion factor for the law-of-cosines bound on domains with sectional
/// curvature bounded below: 1 on nonnegatively curved domains, and
/// `x / tanh(x)` with `x = sqrt(|kappa|) * diameter` otherwise.
pub fn curvature_constant(kappa_min: f64, diameter: f64) -> Result<f64, GeometryError> {
    if !(diameter > 0.0) {
        return Err(GeometryError::InvalidArgument(format!(
            "diameter must be positive, got {diameter}"
        )));
    }
    if kappa_min >= 0.0 {
        return Ok(1.0);
    }
    let x = kappa_min.abs().sqrt() * diameter;
    if x < 1e-8 {
        // x / tanh(x) -> 1 and the quotient is 0/0 at x = 0.
        Ok(1.0)
    } else {
        Ok(x / x.tanh())
    }
}

/// The manifold interface every concrete geometry implements. Methods operate
/// on raw representations and do not re-validate inputs; the checked wrappers
/// [`ManifoldPoint`] and [`TangentVector`] do.
pub trait Geometry: Clone + PartialEq + Send + Sync + std::fmt::Debug + 'static {
    type Point: Clone + PartialEq + Send + Sync + std::fmt::Debug + 'static;
    type Tangent: Clone + PartialEq + Send + Sync + std::fmt::Debug + 'static;

    fn intrinsic_dim(&self) -> usize;
    fn descriptor(&self) -> ManifoldDescriptor;

    fn check_point(&self, point: &Self::Point, tol: &Tolerances) -> Result<(), GeometryError>;
    fn check_tangent(
        &self,
        point: &Self::Point,
        tangent: &Self::Tangent,
        tol: &Tolerances,
    ) -> Result<(), GeometryError>;

    /// Riemannian inner product of two tangent vectors at `point`.
    fn inner(&self, point: &Self::Point, u: &Self::Tangent, v: &Self::Tangent) -> f64;

    fn norm(&self, point: &Self::Point, v: &Self::Tangent) -> f64 {
        self.inner(point, v, v).max(0.0).sqrt()
    }

    /// Endpoint of the unit-time geodesic leaving `point` with velocity `v`.
    fn exp(&self, point: &Self::Point, v: &Self::Tangent) -> Self::Point;

    /// Inverse of `exp` where defined.
    fn log(&self, point: &Self::Point, other: &Self::Point)
        -> Result<Self::Tangent, GeometryError>;

    /// Geodesic distance. Total (never errors); returns the limit value at
    /// the injectivity boundary.
    fn dist(&self, point: &Self::Point, other: &Self::Point) -> f64;

    /// Converts an ambient (Euclidean) gradient into the Riemannian gradient.
    fn egrad_to_rgrad(
        &self,
        point: &Self::Point,
        ambient_grad: &Self::Tangent,
    ) -> Result<Self::Tangent, GeometryError>;

    /// Coordinates of a tangent vector in the geometry's fixed basis
    /// (length `intrinsic_dim`).
    fn vectorize(&self, point: &Self::Point, v: &Self::Tangent) -> DVector<f64>;

    /// Inverse of [`Geometry::vectorize`].
    fn unvectorize(
        &self,
        point: &Self::Point,
        coords: &DVector<f64>,
    ) -> Result<Self::Tangent, GeometryError>;

    /// Metric tensor `G_p` in the fixed basis, so that
    /// `inner(u, v) == vectorize(u)^T G_p vectorize(v)`.
    fn metric_tensor(&self, point: &Self::Point) -> Result<DMatrix<f64>, GeometryError>;

    fn zero_tangent(&self, point: &Self::Point) -> Self::Tangent;

    /// `a * u + b * v`.
    fn lincomb(&self, a: f64, u: &Self::Tangent, b: f64, v: &Self::Tangent) -> Self::Tangent;

    /// Maps i.i.d. standard normal coordinates (length `intrinsic_dim`) to a
    /// tangent vector distributed as the unit-scale tangent-space Gaussian,
    /// i.e. with coordinate law `N(0, G_p^{-1})`.
    fn tangent_from_unit_normal(
        &self,
        point: &Self::Point,
        coords: &DVector<f64>,
    ) -> Result<Self::Tangent, GeometryError>;
}

/// A validated point on a geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldPoint<G: Geometry> {
    geometry: G,
    value: G::Point,
}

impl<G: Geometry> ManifoldPoint<G> {
    pub fn new(geometry: G, value: G::Point) -> Result<Self, GeometryError> {
        Self::with_tolerances(geometry, value, &Tolerances::default())
    }

    pub fn with_tolerances(
        geometry: G,
        value: G::Point,
        tol: &Tolerances,
    ) -> Result<Self, GeometryError> {
        geometry.check_point(&value, tol)?;
        Ok(Self { geometry, value })
    }

    pub fn geometry(&self) -> &G {
        &self.geometry
    }

    pub fn value(&self) -> &G::Point {
        &self.value
    }

    pub fn into_value(self) -> G::Point {
        self.value
    }

    fn same_geometry(&self, other: &Self) -> Result<(), GeometryError> {
        if self.geometry == other.geometry {
            Ok(())
        } else {
            Err(GeometryError::GeometryMismatch)
        }
    }

    /// Exponential map. The tangent must be anchored at `self`.
    pub fn exp(&self, v: &TangentVector<G>) -> Result<Self, GeometryError> {
        if v.base.value != self.value {
            return Err(GeometryError::BaseMismatch);
        }
        let raw = self.geometry.exp(&self.value, &v.value);
        // exp may drift at roundoff scale; revalidate rather than trust it.
        Self::new(self.geometry.clone(), raw)
    }

    /// Logarithm map toward `other`.
    pub fn log(&self, other: &Self) -> Result<TangentVector<G>, GeometryError> {
        self.same_geometry(other)?;
        let raw = self.geometry.log(&self.value, &other.value)?;
        Ok(TangentVector {
            base: self.clone(),
            value: raw,
        })
    }

    /// Geodesic distance to `other`.
    pub fn distance(&self, other: &Self) -> Result<f64, GeometryError> {
        self.same_geometry(other)?;
        Ok(self.geometry.dist(&self.value, &other.value))
    }

    /// Riemannian gradient from an ambient gradient.
    pub fn rgrad_from_ambient(
        &self,
        ambient_grad: &G::Tangent,
    ) -> Result<TangentVector<G>, GeometryError> {
        let raw = self.geometry.egrad_to_rgrad(&self.value, ambient_grad)?;
        Ok(TangentVector {
            base: self.clone(),
            value: raw,
        })
    }

    /// Builds a tangent vector at `self` from raw ambient data, validating
    /// tangency.
    pub fn tangent(&self, value: G::Tangent) -> Result<TangentVector<G>, GeometryError> {
        self.geometry
            .check_tangent(&self.value, &value, &Tolerances::default())?;
        Ok(TangentVector {
            base: self.clone(),
            value,
        })
    }

    /// Tangent vector from basis coordinates (inverse of vectorize).
    pub fn tangent_from_coords(
        &self,
        coords: &DVector<f64>,
    ) -> Result<TangentVector<G>, GeometryError> {
        let raw = self.geometry.unvectorize(&self.value, coords)?;
        Ok(TangentVector {
            base: self.clone(),
            value: raw,
        })
    }

    pub fn zero_tangent(&self) -> TangentVector<G> {
        TangentVector {
            base: self.clone(),
            value: self.geometry.zero_tangent(&self.value),
        }
    }

    pub fn metric_tensor(&self) -> Result<DMatrix<f64>, GeometryError> {
        self.geometry.metric_tensor(&self.value)
    }
}

/// A tangent vector together with the point it is anchored at.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector<G: Geometry> {
    base: ManifoldPoint<G>,
    value: G::Tangent,
}

impl<G: Geometry> TangentVector<G> {
    pub fn base(&self) -> &ManifoldPoint<G> {
        &self.base
    }

    pub fn value(&self) -> &G::Tangent {
        &self.value
    }

    pub fn into_value(self) -> G::Tangent {
        self.value
    }

    /// Riemannian inner product; both vectors must share the exact base point.
    pub fn inner(&self, other: &Self) -> Result<f64, GeometryError> {
        if self.base.value != other.base.value {
            return Err(GeometryError::BaseMismatch);
        }
        Ok(self
            .base
            .geometry
            .inner(&self.base.value, &self.value, &other.value))
    }

    pub fn norm(&self) -> f64 {
        self.base.geometry.norm(&self.base.value, &self.value)
    }

    pub fn scale(&self, s: f64) -> Self {
        let zero = self.base.geometry.zero_tangent(&self.base.value);
        Self {
            base: self.base.clone(),
            value: self.base.geometry.lincomb(s, &self.value, 0.0, &zero),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, GeometryError> {
        if self.base.value != other.base.value {
            return Err(GeometryError::BaseMismatch);
        }
        Ok(Self {
            base: self.base.clone(),
            value: self
                .base
                .geometry
                .lincomb(1.0, &self.value, 1.0, &other.value),
        })
    }

    pub fn vectorize(&self) -> DVector<f64> {
        self.base.geometry.vectorize(&self.base.value, &self.value)
    }
}

/// One step of the geodesic running average:
/// `Exp_bar(weight * Log_bar(next))` for `weight` in (0, 1].
pub fn geodesic_average_step<G: Geometry>(
    bar: &ManifoldPoint<G>,
    next: &ManifoldPoint<G>,
    weight: f64,
) -> Result<ManifoldPoint<G>, GeometryError> {
    if !(weight > 0.0 && weight <= 1.0) {
        return Err(GeometryError::InvalidArgument(format!(
            "averaging weight must lie in (0, 1], got {weight}"
        )));
    }
    let step = bar.log(next)?.scale(weight);
    bar.exp(&step)
}
