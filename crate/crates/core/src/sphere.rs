//! The unit sphere `S^d` embedded in `R^{d+1}` with the Euclidean metric,
//! and the leading-eigenvector (PCA) objective defined on it.
//!
//! Tangent space at `w`: `{ xi : w^T xi = 0 }`. The exponential map follows
//! the great circle, `Exp_w(xi) = cos(|xi|) w + sin(|xi|) xi / |xi|`, and the
//! logarithm inverts it everywhere except at antipodal pairs. Tangent
//! coordinates use the Householder frame completing `w` to an orthonormal
//! basis, under which the metric tensor is the identity.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::manifold::{
    AmbientShape, Geometry, GeometryError, ManifoldDescriptor, ManifoldPoint, Tolerances,
};
use crate::objective::{Convention, Objective};

/// Threshold below which the sphere logarithm falls back to the first-order
/// series (the projected difference), avoiding a 0/0 in the closed form.
const LOG_SERIES_THRESHOLD: f64 = 1e-8;

/// Inner product below which two unit vectors are treated as antipodal.
const ANTIPODAL_THRESHOLD: f64 = -1.0 + 1e-10;

/// The sphere `S^d` of unit vectors in `R^{d+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sphere {
    ambient_dim: usize,
}

impl Sphere {
    /// Sphere embedded in `R^{ambient_dim}`; requires `ambient_dim >= 2`.
    pub fn new(ambient_dim: usize) -> Result<Self, GeometryError> {
        if ambient_dim < 2 {
            return Err(GeometryError::InvalidArgument(format!(
                "sphere needs ambient dimension >= 2, got {ambient_dim}"
            )));
        }
        Ok(Self { ambient_dim })
    }

    pub fn from_intrinsic_dim(d: usize) -> Result<Self, GeometryError> {
        Self::new(d + 1)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Uniform point on the sphere.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        loop {
            let v = DVector::from_fn(self.ambient_dim, |_, _| {
                rng.sample::<f64, _>(StandardNormal)
            });
            let n = v.norm();
            if n > 1e-6 {
                return v / n;
            }
        }
    }

    fn check_shape(&self, len: usize) -> Result<(), GeometryError> {
        if len != self.ambient_dim {
            return Err(GeometryError::ShapeMismatch {
                expected: AmbientShape::Vector(self.ambient_dim).to_string(),
                got: AmbientShape::Vector(len).to_string(),
            });
        }
        Ok(())
    }

    /// Householder reflector data for the tangent frame at `w`: the frame is
    /// columns 1..ambient of `Q = I - 2 v v^T / |v|^2` with `v = w + s e_0`,
    /// `s = sign(w_0)`. `Q e_0 = -s w`, so those columns span `w`-orthogonal.
    fn householder(&self, w: &DVector<f64>) -> (DVector<f64>, f64) {
        let s = if w[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = w.clone();
        v[0] += s;
        let scale = 2.0 / v.norm_squared();
        (v, scale)
    }

    fn reflect(&self, v: &DVector<f64>, scale: f64, x: &DVector<f64>) -> DVector<f64> {
        x - &(v * (scale * v.dot(x)))
    }
}

impl Geometry for Sphere {
    type Point = DVector<f64>;
    type Tangent = DVector<f64>;

    fn intrinsic_dim(&self) -> usize {
        self.ambient_dim - 1
    }

    fn descriptor(&self) -> ManifoldDescriptor {
        ManifoldDescriptor {
            intrinsic_dim: self.intrinsic_dim(),
            ambient_shape: AmbientShape::Vector(self.ambient_dim),
            injectivity_note: "logarithm undefined at antipodal pairs; injectivity radius pi",
        }
    }

    fn check_point(&self, point: &DVector<f64>, tol: &Tolerances) -> Result<(), GeometryError> {
        self.check_shape(point.len())?;
        let norm = point.norm();
        if (norm - 1.0).abs() > tol.point {
            return Err(GeometryError::InvalidPoint(format!(
                "norm deviates from 1 by {:.3e}",
                (norm - 1.0).abs()
            )));
        }
        Ok(())
    }

    fn check_tangent(
        &self,
        point: &DVector<f64>,
        tangent: &DVector<f64>,
        tol: &Tolerances,
    ) -> Result<(), GeometryError> {
        self.check_shape(tangent.len())?;
        let radial = point.dot(tangent).abs();
        if radial > tol.tangent * (1.0 + tangent.norm()) {
            return Err(GeometryError::InvalidTangent(format!(
                "radial component {radial:.3e} exceeds tolerance"
            )));
        }
        Ok(())
    }

    fn inner(&self, _point: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(v)
    }

    fn exp(&self, point: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let theta = v.norm();
        if theta == 0.0 {
            return point.clone();
        }
        let out = point * theta.cos() + v * (theta.sin() / theta);
        let n = out.norm();
        out / n
    }

    fn log(
        &self,
        point: &DVector<f64>,
        other: &DVector<f64>,
    ) -> Result<DVector<f64>, GeometryError> {
        let c = point.dot(other).clamp(-1.0, 1.0);
        if c <= ANTIPODAL_THRESHOLD {
            return Err(GeometryError::LogUndefined(
                "antipodal points on the sphere".into(),
            ));
        }
        let perp = other - point * c;
        let perp_norm = perp.norm();
        if perp_norm == 0.0 {
            return Ok(DVector::zeros(self.ambient_dim));
        }
        let theta = c.acos();
        if theta < LOG_SERIES_THRESHOLD {
            // |perp| = sin(theta); theta/sin(theta) - 1 < 2e-17 here.
            return Ok(perp);
        }
        Ok(perp * (theta / perp_norm))
    }

    fn dist(&self, point: &DVector<f64>, other: &DVector<f64>) -> f64 {
        point.dot(other).clamp(-1.0, 1.0).acos()
    }

    fn egrad_to_rgrad(
        &self,
        point: &DVector<f64>,
        ambient_grad: &DVector<f64>,
    ) -> Result<DVector<f64>, GeometryError> {
        self.check_shape(ambient_grad.len())?;
        Ok(ambient_grad - point * point.dot(ambient_grad))
    }

    fn vectorize(&self, point: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let (hv, scale) = self.householder(point);
        let reflected = self.reflect(&hv, scale, v);
        reflected.rows(1, self.ambient_dim - 1).into_owned()
    }

    fn unvectorize(
        &self,
        point: &DVector<f64>,
        coords: &DVector<f64>,
    ) -> Result<DVector<f64>, GeometryError> {
        let d = self.intrinsic_dim();
        if coords.len() != d {
            return Err(GeometryError::ShapeMismatch {
                expected: format!("coordinates of length {d}"),
                got: format!("length {}", coords.len()),
            });
        }
        let mut padded = DVector::zeros(self.ambient_dim);
        padded.rows_mut(1, d).copy_from(coords);
        let (hv, scale) = self.householder(point);
        Ok(self.reflect(&hv, scale, &padded))
    }

    fn metric_tensor(&self, _point: &DVector<f64>) -> Result<DMatrix<f64>, GeometryError> {
        Ok(DMatrix::identity(
            self.intrinsic_dim(),
            self.intrinsic_dim(),
        ))
    }

    fn zero_tangent(&self, _point: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.ambient_dim)
    }

    fn lincomb(&self, a: f64, u: &DVector<f64>, b: f64, v: &DVector<f64>) -> DVector<f64> {
        u * a + v * b
    }

    fn tangent_from_unit_normal(
        &self,
        point: &DVector<f64>,
        coords: &DVector<f64>,
    ) -> Result<DVector<f64>, GeometryError> {
        // G_w = I in the frame coordinates, so unit normals map directly.
        self.unvectorize(point, coords)
    }
}

/// Leading-eigenvector objective: `f(w; z) = -(w^T z)^2`, so that
/// `F(w) = -w^T A w` for the sample covariance `A`.
pub struct PcaObjective {
    geometry: Sphere,
    samples: Vec<DVector<f64>>,
    covariance: DMatrix<f64>,
}

impl PcaObjective {
    pub fn new(samples: Vec<DVector<f64>>) -> Result<Self, GeometryError> {
        let first = samples
            .first()
            .ok_or_else(|| GeometryError::InvalidArgument("empty sample set".into()))?;
        let ambient = first.len();
        let geometry = Sphere::new(ambient)?;
        if let Some(bad) = samples.iter().find(|z| z.len() != ambient) {
            return Err(GeometryError::ShapeMismatch {
                expected: format!("samples of length {ambient}"),
                got: format!("length {}", bad.len()),
            });
        }
        let mut covariance = DMatrix::zeros(ambient, ambient);
        for z in &samples {
            covariance.syger(1.0 / samples.len() as f64, z, z, 1.0);
        }
        // syger fills the lower triangle; mirror it.
        covariance.fill_upper_triangle_with_lower_triangle();
        Ok(Self {
            geometry,
            samples,
            covariance,
        })
    }

    pub fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }

    /// Sample covariance `A = (1/n) sum z_i z_i^T`.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Euclidean gradient of the full loss, `-2 A w`. Used by the
    /// projected-gradient baseline, which perturbs in the ambient space.
    pub fn euclidean_full_grad(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.covariance * w * -2.0
    }

    /// Geodesic Lipschitz estimate from the samples.
    ///
    /// `Exact` returns `2 max_i |z_i|^2`, which bounds the per-sample
    /// gradient norm `|2 (I - w w^T) z_i z_i^T w|`. `Literal` returns
    /// `max_i |z_i|^2`, the published estimate, which drops the factor 2.
    pub fn lipschitz_estimate(&self, convention: Convention) -> f64 {
        let max_sq = self
            .samples
            .iter()
            .map(|z| z.norm_squared())
            .fold(0.0, f64::max);
        match convention {
            Convention::Exact => 2.0 * max_sq,
            Convention::Literal => max_sq,
        }
    }
}

/// `-(w^T z)^2`.
pub fn pca_loss(w: &DVector<f64>, z: &DVector<f64>) -> f64 {
    let t = w.dot(z);
    -(t * t)
}

/// Riemannian gradient of [`pca_loss`]: `-2 (I - w w^T) (z z^T) w`.
pub fn pca_rgrad(w: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
    let t = z.dot(w);
    (z - w * t) * (-2.0 * t)
}

impl Objective<Sphere> for PcaObjective {
    fn geometry(&self) -> &Sphere {
        &self.geometry
    }

    fn num_samples(&self) -> usize {
        self.samples.len()
    }

    fn sample_loss(&self, point: &DVector<f64>, idx: usize) -> f64 {
        pca_loss(point, &self.samples[idx])
    }

    fn sample_rgrad(&self, point: &DVector<f64>, idx: usize) -> DVector<f64> {
        pca_rgrad(point, &self.samples[idx])
    }

    fn loss(&self, point: &DVector<f64>) -> f64 {
        -point.dot(&(&self.covariance * point))
    }

    fn full_rgrad(&self, point: &DVector<f64>) -> DVector<f64> {
        let aw = &self.covariance * point;
        let radial = point.dot(&aw);
        (aw - point * radial) * -2.0
    }
}

/// Convenience constructor for a validated point on a sphere.
pub fn sphere_point(
    sphere: Sphere,
    value: DVector<f64>,
) -> Result<ManifoldPoint<Sphere>, GeometryError> {
    ManifoldPoint::new(sphere, value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(k: usize, n: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        v
    }

    fn sphere3() -> Sphere {
        Sphere::new(3).unwrap()
    }

    #[test]
    fn inner_orthogonal_coordinate_vectors() {
        let s = sphere3();
        let w = e(0, 3);
        assert_eq!(s.inner(&w, &e(1, 3), &e(2, 3)), 0.0);
    }

    #[test]
    fn norm_is_euclidean() {
        let s = sphere3();
        let w = e(0, 3);
        assert_eq!(s.norm(&w, &(e(1, 3) * 3.0)), 3.0);
        assert_eq!(s.norm(&w, &DVector::zeros(3)), 0.0);
    }

    #[test]
    fn exp_zero_velocity_is_identity() {
        let s = sphere3();
        let w = e(0, 3);
        assert_eq!(s.exp(&w, &DVector::zeros(3)), w);
    }

    #[test]
    fn exp_quarter_circle() {
        let s = sphere3();
        let w = e(0, 3);
        let xi = e(1, 3) * std::f64::consts::FRAC_PI_2;
        let out = s.exp(&w, &xi);
        assert_relative_eq!(out, e(1, 3), epsilon = 1e-15);
    }

    #[test]
    fn log_at_same_point_is_zero() {
        let s = sphere3();
        let w = e(0, 3);
        assert_eq!(s.log(&w, &w).unwrap(), DVector::zeros(3));
    }

    #[test]
    fn log_quarter_circle() {
        let s = sphere3();
        let got = s.log(&e(0, 3), &e(1, 3)).unwrap();
        assert_relative_eq!(got, e(1, 3) * std::f64::consts::FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn log_rejects_antipodal() {
        let s = sphere3();
        let w = e(0, 3);
        let err = s.log(&w, &(-w.clone())).unwrap_err();
        assert!(matches!(err, GeometryError::LogUndefined(_)));
    }

    #[test]
    fn dist_examples() {
        let s = sphere3();
        let w = e(0, 3);
        assert_eq!(s.dist(&w, &w), 0.0);
        assert_relative_eq!(
            s.dist(&e(0, 3), &e(1, 3)),
            std::f64::consts::FRAC_PI_2,
            epsilon = 1e-15
        );
        // Antipodal pair: the distance is the limit value pi, not an error.
        assert_relative_eq!(
            s.dist(&w, &(-w.clone())),
            std::f64::consts::PI,
            epsilon = 1e-15
        );
    }

    #[test]
    fn egrad_projection_examples() {
        let s = sphere3();
        let w = e(0, 3);
        let eg = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        assert_relative_eq!(s.egrad_to_rgrad(&w, &eg).unwrap(), e(1, 3), epsilon = 1e-15);
        // Gradient proportional to w is fully normal.
        assert_relative_eq!(
            s.egrad_to_rgrad(&w, &(w.clone() * 7.5)).unwrap(),
            DVector::zeros(3),
            epsilon = 1e-15
        );
    }

    #[test]
    fn egrad_shape_mismatch() {
        let s = sphere3();
        let w = e(0, 3);
        assert!(s.egrad_to_rgrad(&w, &DVector::zeros(4)).is_err());
    }

    #[test]
    fn vectorize_roundtrip_and_isometry() {
        let s = Sphere::new(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let w = s.random_point(&mut rng);
            let raw = DVector::from_fn(5, |_, _| rng.sample::<f64, _>(StandardNormal));
            let xi = s.egrad_to_rgrad(&w, &raw).unwrap();
            let coords = s.vectorize(&w, &xi);
            assert_eq!(coords.len(), 4);
            // Orthonormal frame: coordinates preserve the norm.
            assert_relative_eq!(coords.norm(), s.norm(&w, &xi), epsilon = 1e-12);
            let back = s.unvectorize(&w, &coords).unwrap();
            assert_relative_eq!(back, xi, epsilon = 1e-12);
        }
    }

    #[test]
    fn unvectorize_rejects_bad_length() {
        let s = sphere3();
        let w = e(0, 3);
        assert!(s.unvectorize(&w, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn metric_tensor_is_identity() {
        let s = Sphere::new(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = s.random_point(&mut rng);
        assert_eq!(s.metric_tensor(&w).unwrap(), DMatrix::identity(4, 4));
    }

    #[test]
    fn descriptor_dimensions() {
        let s = Sphere::new(50).unwrap();
        let d = s.descriptor();
        assert_eq!(d.intrinsic_dim, 49);
        assert_eq!(d.ambient_shape, AmbientShape::Vector(50));
    }

    #[test]
    fn pca_loss_examples() {
        let w = e(0, 3);
        assert_eq!(pca_loss(&w, &e(1, 3)), 0.0);
        assert_eq!(pca_loss(&w, &(e(0, 3) * 2.0)), -4.0);
        let diag = DVector::from_vec(vec![1.0, 1.0, 0.0]) / 2.0f64.sqrt();
        assert_relative_eq!(pca_loss(&diag, &e(0, 3)), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn pca_rgrad_examples() {
        let w = e(0, 3);
        // Orthogonal sample: gradient vanishes.
        assert_eq!(pca_rgrad(&w, &e(1, 3)), DVector::zeros(3));
        // Eigenvector stationarity.
        assert_relative_eq!(pca_rgrad(&w, &e(0, 3)), DVector::zeros(3), epsilon = 1e-15);
        // Slanted point: value computed by expanding -2(I - ww^T) z z^T w.
        let diag = DVector::from_vec(vec![1.0, 1.0, 0.0]) / 2.0f64.sqrt();
        let got = pca_rgrad(&diag, &e(0, 3));
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        let want = DVector::from_vec(vec![-inv_sqrt2, inv_sqrt2, 0.0]);
        assert_relative_eq!(got, want, epsilon = 1e-12);
    }

    #[test]
    fn pca_rgrad_tangency_random() {
        let s = Sphere::new(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let w = s.random_point(&mut rng);
            let z = DVector::from_fn(6, |_, _| rng.sample::<f64, _>(StandardNormal)) * 2.0;
            let g = pca_rgrad(&w, &z);
            assert!(w.dot(&g).abs() <= 1e-10 * (1.0 + z.norm_squared()));
        }
    }

    #[test]
    fn lipschitz_estimate_modes() {
        let samples = vec![e(0, 3), e(1, 3) * 0.5];
        let obj = PcaObjective::new(samples).unwrap();
        assert_eq!(obj.lipschitz_estimate(Convention::Exact), 2.0);
        assert_eq!(obj.lipschitz_estimate(Convention::Literal), 1.0);
    }

    #[test]
    fn lipschitz_zero_for_all_zero_samples() {
        let obj = PcaObjective::new(vec![DVector::zeros(3), DVector::zeros(3)]).unwrap();
        assert_eq!(obj.lipschitz_estimate(Convention::Exact), 0.0);
        // Rejected downstream when building a profile.
        assert!(crate::manifold::DomainProfile::new(0.0, 1.0).is_err());
    }

    #[test]
    fn lipschitz_bounds_every_sample_gradient() {
        let s = Sphere::new(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples: Vec<DVector<f64>> = (0..40)
            .map(|_| DVector::from_fn(5, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let obj = PcaObjective::new(samples.clone()).unwrap();
        let l0 = obj.lipschitz_estimate(Convention::Exact);
        for _ in 0..20 {
            let w = s.random_point(&mut rng);
            for z in &samples {
                assert!(pca_rgrad(&w, z).norm() <= l0 + 1e-12);
            }
        }
    }

    #[test]
    fn full_gradient_vanishes_at_leading_eigenvector() {
        // Covariance diag(2, 1, 1) from three axis samples; leading
        // eigenvector is e0.
        let obj = PcaObjective::new(vec![
            e(0, 3) * 6.0f64.sqrt(),
            e(1, 3) * 3.0f64.sqrt(),
            e(2, 3) * 3.0f64.sqrt(),
        ])
        .unwrap();
        let a = obj.covariance();
        assert_relative_eq!(a[(0, 0)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(a[(1, 1)], 1.0, epsilon = 1e-12);
        let grad = obj.full_rgrad(&e(0, 3));
        assert!(grad.norm() <= 1e-8 * a.norm());
    }

    #[test]
    fn empty_samples_rejected() {
        assert!(PcaObjective::new(vec![]).is_err());
    }
}
