//! Symmetric positive definite matrices under the affine-invariant metric
//! `<U, V>_W = tr(U W^-1 V W^-1)`, the matrix-function kernels backing it,
//! and the Fréchet-mean objective.
//!
//! All matrix functions go through a symmetric eigendecomposition; at the
//! sizes this crate targets (r <= 16) that is both the simplest and the most
//! accurate route, and it keeps every output exactly symmetric after
//! resymmetrization.

use nalgebra::{DMatrix, DVector};

use crate::manifold::{
    AmbientShape, DomainProfile, Geometry, GeometryError, ManifoldDescriptor, Tolerances,
};
use crate::objective::{Convention, Objective};

/// Absolute asymmetry budget for matrix-function inputs.
const SYMMETRY_TOLERANCE: f64 = 1e-8;

fn asymmetry_norm(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).norm()
}

fn check_square(m: &DMatrix<f64>) -> Result<usize, GeometryError> {
    if m.nrows() != m.ncols() {
        return Err(GeometryError::ShapeMismatch {
            expected: "square matrix".into(),
            got: AmbientShape::Matrix(m.nrows(), m.ncols()).to_string(),
        });
    }
    Ok(m.nrows())
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<(), GeometryError> {
    check_square(m)?;
    let asym = asymmetry_norm(m);
    if asym > SYMMETRY_TOLERANCE {
        return Err(GeometryError::InvalidArgument(format!(
            "matrix is not symmetric (asymmetry norm {asym:.3e})"
        )));
    }
    Ok(())
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Applies `f` to the eigenvalues of a symmetric matrix: `Q f(L) Q^T`.
fn sym_eig_map(
    m: &DMatrix<f64>,
    f: impl Fn(f64) -> Result<f64, GeometryError>,
) -> Result<DMatrix<f64>, GeometryError> {
    let eig = symmetrize(m).symmetric_eigen();
    let mut vals = DVector::zeros(eig.eigenvalues.len());
    for i in 0..vals.len() {
        vals[i] = f(eig.eigenvalues[i])?;
    }
    let recomposed =
        &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    Ok(symmetrize(&recomposed))
}

/// Principal matrix exponential of a symmetric matrix.
pub fn spd_expm(m: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
    check_symmetric(m)?;
    sym_eig_map(m, |x| Ok(x.exp()))
}

/// Principal matrix logarithm of an SPD matrix.
pub fn spd_logm(m: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
    check_symmetric(m)?;
    sym_eig_map(m, |x| {
        if x <= 0.0 {
            Err(GeometryError::InvalidArgument(format!(
                "matrix is not positive definite (eigenvalue {x:.3e})"
            )))
        } else {
            Ok(x.ln())
        }
    })
}

/// Principal square root of an SPD matrix.
pub fn spd_sqrtm(m: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
    check_symmetric(m)?;
    sym_eig_map(m, |x| {
        if x <= 0.0 {
            Err(GeometryError::InvalidArgument(format!(
                "matrix is not positive definite (eigenvalue {x:.3e})"
            )))
        } else {
            Ok(x.sqrt())
        }
    })
}

/// Eigendecomposition of an SPD point with the derived kernels the geometry
/// needs: square root, inverse square root, and logarithm.
#[derive(Clone, Debug)]
pub struct SpdKernelCache {
    eigvals: DVector<f64>,
    eigvecs: DMatrix<f64>,
    sqrt: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
    log: DMatrix<f64>,
}

impl SpdKernelCache {
    pub fn new(w: &DMatrix<f64>) -> Result<Self, GeometryError> {
        check_symmetric(w)?;
        let eig = symmetrize(w).symmetric_eigen();
        if let Some(bad) = eig.eigenvalues.iter().find(|&&x| x <= 0.0) {
            return Err(GeometryError::InvalidPoint(format!(
                "matrix is not positive definite (eigenvalue {bad:.3e})"
            )));
        }
        let compose = |f: &dyn Fn(f64) -> f64| -> DMatrix<f64> {
            let vals = DVector::from_fn(eig.eigenvalues.len(), |i, _| f(eig.eigenvalues[i]));
            symmetrize(
                &(&eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()),
            )
        };
        let sqrt = compose(&f64::sqrt);
        let inv_sqrt = compose(&|x| 1.0 / x.sqrt());
        let log = compose(&f64::ln);
        let recon = compose(&|x| x);
        let err = (&recon - w).norm();
        if err > 1e-10 * w.norm().max(1.0) {
            return Err(GeometryError::InvalidPoint(format!(
                "eigendecomposition reconstruction error {err:.3e}"
            )));
        }
        Ok(Self {
            eigvals: eig.eigenvalues,
            eigvecs: eig.eigenvectors,
            sqrt,
            inv_sqrt,
            log,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigvals
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    pub fn sqrt(&self) -> &DMatrix<f64> {
        &self.sqrt
    }

    pub fn inv_sqrt(&self) -> &DMatrix<f64> {
        &self.inv_sqrt
    }

    pub fn log(&self) -> &DMatrix<f64> {
        &self.log
    }

    /// `Log_W(X)` through the cache: `W^{1/2} logm(W^{-1/2} X W^{-1/2}) W^{1/2}`.
    pub fn log_map(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
        let mid = symmetrize(&(&self.inv_sqrt * x * &self.inv_sqrt));
        let logmid = spd_logm(&mid)?;
        Ok(symmetrize(&(&self.sqrt * logmid * &self.sqrt)))
    }

    /// `Exp_W(U)` through the cache.
    pub fn exp_map(&self, u: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
        let mid = symmetrize(&(&self.inv_sqrt * u * &self.inv_sqrt));
        let expmid = spd_expm(&mid)?;
        Ok(symmetrize(&(&self.sqrt * expmid * &self.sqrt)))
    }

    /// Geodesic distance from the cached point to `x`.
    pub fn dist_to(&self, x: &DMatrix<f64>) -> f64 {
        let mid = symmetrize(&(&self.inv_sqrt * x * &self.inv_sqrt));
        let eig = mid.symmetric_eigen();
        eig.eigenvalues
            .iter()
            .map(|&l| l.max(f64::MIN_POSITIVE).ln().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// The manifold of r x r symmetric positive definite matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Spd {
    size: usize,
}

impl Spd {
    pub fn new(size: usize) -> Result<Self, GeometryError> {
        if size == 0 {
            return Err(GeometryError::InvalidArgument(
                "SPD matrices need size >= 1".into(),
            ));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn identity(&self) -> DMatrix<f64> {
        DMatrix::identity(self.size, self.size)
    }

    fn check_shape(&self, m: &DMatrix<f64>) -> Result<(), GeometryError> {
        if m.nrows() != self.size || m.ncols() != self.size {
            return Err(GeometryError::ShapeMismatch {
                expected: AmbientShape::Matrix(self.size, self.size).to_string(),
                got: AmbientShape::Matrix(m.nrows(), m.ncols()).to_string(),
            });
        }
        Ok(())
    }

    /// Index layout of the Frobenius-orthonormal symmetric basis: the r
    /// diagonal elements `E_ii`, then the off-diagonal pairs
    /// `(E_ij + E_ji)/sqrt(2)` for i < j in row-major order.
    fn coord_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        // Pairs before row i: sum_{k<i} (r-1-k); then offset within row i.
        let r = self.size;
        let before: usize = (0..i).map(|k| r - 1 - k).sum();
        r + before + (j - i - 1)
    }
}

impl Geometry for Spd {
    type Point = DMatrix<f64>;
    type Tangent = DMatrix<f64>;

    fn intrinsic_dim(&self) -> usize {
        self.size * (self.size + 1) / 2
    }

    fn descriptor(&self) -> ManifoldDescriptor {
        ManifoldDescriptor {
            intrinsic_dim: self.intrinsic_dim(),
            ambient_shape: AmbientShape::Matrix(self.size, self.size),
            injectivity_note: "exponential map globally invertible (Hadamard manifold)",
        }
    }

    fn check_point(&self, point: &DMatrix<f64>, tol: &Tolerances) -> Result<(), GeometryError> {
        self.check_shape(point)?;
        let asym = asymmetry_norm(point);
        if asym > tol.point {
            return Err(GeometryError::InvalidPoint(format!(
                "asymmetry norm {asym:.3e} exceeds tolerance"
            )));
        }
        let eig = symmetrize(point).symmetric_eigen();
        let min = eig.eigenvalues.min();
        if !(min > tol.point) {
            return Err(GeometryError::InvalidPoint(format!(
                "smallest eigenvalue {min:.3e} is not positive"
            )));
        }
        Ok(())
    }

    fn check_tangent(
        &self,
        _point: &DMatrix<f64>,
        tangent: &DMatrix<f64>,
        tol: &Tolerances,
    ) -> Result<(), GeometryError> {
        self.check_shape(tangent)?;
        let asym = asymmetry_norm(tangent);
        if asym > tol.tangent {
            return Err(GeometryError::InvalidTangent(format!(
                "asymmetry norm {asym:.3e} exceeds tolerance"
            )));
        }
        Ok(())
    }

    fn inner(&self, point: &DMatrix<f64>, u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
        // tr(U W^-1 V W^-1); the Cholesky solve avoids forming W^-1.
        let chol = symmetrize(point)
            .cholesky()
            .expect("inner product requires an SPD base point");
        let wu = chol.solve(u);
        let wv = chol.solve(v);
        (wu * wv).trace()
    }

    fn exp(&self, point: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
        if v.iter().all(|&x| x == 0.0) {
            return point.clone();
        }
        let cache = SpdKernelCache::new(point).expect("exp requires an SPD base point");
        cache.exp_map(v).expect("matrix exponential is total")
    }

    fn log(
        &self,
        point: &DMatrix<f64>,
        other: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>, GeometryError> {
        let cache = SpdKernelCache::new(point)?;
        cache.log_map(other)
    }

    fn dist(&self, point: &DMatrix<f64>, other: &DMatrix<f64>) -> f64 {
        let cache = SpdKernelCache::new(point).expect("dist requires an SPD base point");
        cache.dist_to(other)
    }

    fn egrad_to_rgrad(
        &self,
        point: &DMatrix<f64>,
        ambient_grad: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>, GeometryError> {
        self.check_shape(ambient_grad)?;
        let sym_grad = symmetrize(ambient_grad);
        Ok(symmetrize(&(point * sym_grad * point)))
    }

    fn vectorize(&self, _point: &DMatrix<f64>, v: &DMatrix<f64>) -> DVector<f64> {
        let r = self.size;
        let mut coords = DVector::zeros(self.intrinsic_dim());
        for i in 0..r {
            coords[i] = v[(i, i)];
        }
        let sqrt2 = 2.0f64.sqrt();
        for i in 0..r {
            for j in (i + 1)..r {
                coords[self.coord_index(i, j)] = sqrt2 * 0.5 * (v[(i, j)] + v[(j, i)]);
            }
        }
        coords
    }

    fn unvectorize(
        &self,
        _point: &DMatrix<f64>,
        coords: &DVector<f64>,
    ) -> Result<DMatrix<f64>, GeometryError> {
        let d = self.intrinsic_dim();
        if coords.len() != d {
            return Err(GeometryError::ShapeMismatch {
                expected: format!("coordinates of length {d}"),
                got: format!("length {}", coords.len()),
            });
        }
        let r = self.size;
        let mut m = DMatrix::zeros(r, r);
        for i in 0..r {
            m[(i, i)] = coords[i];
        }
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        for i in 0..r {
            for j in (i + 1)..r {
                let x = coords[self.coord_index(i, j)] * inv_sqrt2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        Ok(m)
    }

    fn metric_tensor(&self, point: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
        // Testing device, not a hot path: the explicit tensor is only built
        // for r <= 8 (d <= 36); large-r sampling goes through the factored
        // construction in `tangent_from_unit_normal`.
        if self.size > 8 {
            return Err(GeometryError::Unsupported(format!(
                "explicit SPD metric tensor is limited to r <= 8, got r = {}",
                self.size
            )));
        }
        let d = self.intrinsic_dim();
        let mut basis = Vec::with_capacity(d);
        for a in 0..d {
            let mut coords = DVector::zeros(d);
            coords[a] = 1.0;
            basis.push(self.unvectorize(point, &coords)?);
        }
        let mut g = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                let val = self.inner(point, &basis[a], &basis[b]);
                g[(a, b)] = val;
                g[(b, a)] = val;
            }
        }
        Ok(g)
    }

    fn zero_tangent(&self, _point: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::zeros(self.size, self.size)
    }

    fn lincomb(&self, a: f64, u: &DMatrix<f64>, b: f64, v: &DMatrix<f64>) -> DMatrix<f64> {
        u * a + v * b
    }

    fn tangent_from_unit_normal(
        &self,
        point: &DMatrix<f64>,
        coords: &DVector<f64>,
    ) -> Result<DMatrix<f64>, GeometryError> {
        // eta with i.i.d. unit-normal Frobenius coordinates, congruated by
        // W^{1/2}: |W^{1/2} eta W^{1/2}|_W = |eta|_F, so the result follows
        // the unit tangent-space Gaussian at W exactly.
        let eta = self.unvectorize(point, coords)?;
        let cache = SpdKernelCache::new(point)?;
        Ok(symmetrize(&(cache.sqrt() * eta * cache.sqrt())))
    }
}

/// Squared geodesic distance `dist^2(W, X)`.
pub fn frechet_loss(spd: &Spd, w: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let d = spd.dist(w, x);
    d * d
}

/// Per-sample gradient of the Fréchet objective.
///
/// `Exact` returns `-2 Log_W(X)`, the Riemannian gradient of `dist^2(., X)`,
/// with norm `2 dist(W, X)`. `Literal` returns `W logm(W^-1 X)` as published,
/// evaluated in the symmetric equal form
/// `W^{1/2} logm(W^{-1/2} X W^{-1/2}) W^{1/2}` — which is `+Log_W(X)`, the
/// negative half of the exact gradient, so following it unmodified ascends.
pub fn frechet_rgrad(
    spd: &Spd,
    w: &DMatrix<f64>,
    x: &DMatrix<f64>,
    convention: Convention,
) -> Result<DMatrix<f64>, GeometryError> {
    let log = spd.log(w, x)?;
    Ok(match convention {
        Convention::Exact => log * -2.0,
        Convention::Literal => log,
    })
}

/// Lipschitz constant for the Fréchet objective over a domain of the given
/// diameter: `2 D` for the exact gradient, `D` for the literal one.
pub fn frechet_lipschitz(
    profile: &DomainProfile,
    convention: Convention,
) -> Result<f64, GeometryError> {
    let d = profile
        .diameter
        .ok_or_else(|| GeometryError::InvalidArgument("profile is missing diameter".into()))?;
    if !(d > 0.0) {
        return Err(GeometryError::InvalidArgument(format!(
            "diameter must be positive, got {d}"
        )));
    }
    Ok(match convention {
        Convention::Exact => 2.0 * d,
        Convention::Literal => d,
    })
}

/// Fréchet-mean objective: `F(W) = (1/n) sum_i dist^2(W, X_i)`.
pub struct FrechetObjective {
    geometry: Spd,
    samples: Vec<DMatrix<f64>>,
    profile: DomainProfile,
    convention: Convention,
}

impl FrechetObjective {
    pub fn new(
        samples: Vec<DMatrix<f64>>,
        profile: DomainProfile,
        convention: Convention,
    ) -> Result<Self, GeometryError> {
        let first = samples
            .first()
            .ok_or_else(|| GeometryError::InvalidArgument("empty sample set".into()))?;
        let geometry = Spd::new(check_square(first)?)?;
        let tol = Tolerances::default();
        for x in &samples {
            geometry.check_point(x, &tol)?;
        }
        if let Some(diameter) = profile.diameter {
            let caches: Vec<SpdKernelCache> = samples
                .iter()
                .map(SpdKernelCache::new)
                .collect::<Result<_, _>>()?;
            for (i, cache) in caches.iter().enumerate() {
                for x in samples.iter().skip(i + 1) {
                    let d = cache.dist_to(x);
                    if d > diameter + 1e-8 {
                        return Err(GeometryError::InvalidArgument(format!(
                            "sample pair at distance {d:.6} exceeds declared diameter {diameter}"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            geometry,
            samples,
            profile,
            convention,
        })
    }

    pub fn samples(&self) -> &[DMatrix<f64>] {
        &self.samples
    }

    pub fn profile(&self) -> &DomainProfile {
        &self.profile
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn lipschitz(&self) -> Result<f64, GeometryError> {
        frechet_lipschitz(&self.profile, self.convention)
    }

    fn grad_scale(&self) -> f64 {
        match self.convention {
            Convention::Exact => -2.0,
            Convention::Literal => 1.0,
        }
    }
}

impl Objective<Spd> for FrechetObjective {
    fn geometry(&self) -> &Spd {
        &self.geometry
    }

    fn num_samples(&self) -> usize {
        self.samples.len()
    }

    fn sample_loss(&self, point: &DMatrix<f64>, idx: usize) -> f64 {
        frechet_loss(&self.geometry, point, &self.samples[idx])
    }

    fn sample_rgrad(&self, point: &DMatrix<f64>, idx: usize) -> DMatrix<f64> {
        frechet_rgrad(&self.geometry, point, &self.samples[idx], self.convention)
            .expect("gradient requires SPD operands")
    }

    fn loss(&self, point: &DMatrix<f64>) -> f64 {
        let cache = SpdKernelCache::new(point).expect("loss requires an SPD point");
        self.samples
            .iter()
            .map(|x| {
                let d = cache.dist_to(x);
                d * d
            })
            .sum::<f64>()
            / self.samples.len() as f64
    }

    fn batch_rgrad(&self, point: &DMatrix<f64>, indices: &[usize]) -> DMatrix<f64> {
        // One eigendecomposition of the base point for the whole batch.
        let cache = SpdKernelCache::new(point).expect("gradient requires an SPD point");
        let mut acc = self.geometry.zero_tangent(point);
        for &i in indices {
            let log = cache
                .log_map(&self.samples[i])
                .expect("samples validated SPD at construction");
            acc += log;
        }
        acc * (self.grad_scale() / indices.len() as f64)
    }

    fn full_rgrad(&self, point: &DMatrix<f64>) -> DMatrix<f64> {
        let indices: Vec<usize> = (0..self.samples.len()).collect();
        self.batch_rgrad(point, &indices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn diag(values: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(values))
    }

    /// Random SPD point within geodesic distance `radius` of the identity.
    fn random_spd_point<R: Rng>(spd: &Spd, radius: f64, rng: &mut R) -> DMatrix<f64> {
        let d = spd.intrinsic_dim();
        let coords = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let unit = &coords / coords.norm();
        let scaled = unit * (radius * rng.random::<f64>());
        let eye = spd.identity();
        let tangent = spd.unvectorize(&eye, &scaled).unwrap();
        spd.exp(&eye, &tangent)
    }

    fn random_symmetric<R: Rng>(r: usize, scale: f64, rng: &mut R) -> DMatrix<f64> {
        let m = DMatrix::from_fn(r, r, |_, _| rng.sample::<f64, _>(StandardNormal));
        (&m + m.transpose()) * (0.5 * scale)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = DMatrix::zeros(3, 3);
        assert_relative_eq!(
            spd_expm(&z).unwrap(),
            DMatrix::identity(3, 3),
            epsilon = 1e-14
        );
    }

    #[test]
    fn logm_diagonal_case() {
        let m = diag(&[std::f64::consts::E, std::f64::consts::E.powi(2)]);
        assert_relative_eq!(spd_logm(&m).unwrap(), diag(&[1.0, 2.0]), epsilon = 1e-12);
    }

    #[test]
    fn sqrtm_diagonal_case() {
        assert_relative_eq!(
            spd_sqrtm(&diag(&[4.0, 9.0])).unwrap(),
            diag(&[2.0, 3.0]),
            epsilon = 1e-12
        );
    }

    #[test]
    fn logm_expm_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let s = random_symmetric(3, 0.8, &mut rng);
            let back = spd_logm(&spd_expm(&s).unwrap()).unwrap();
            assert!((back - &s).norm() <= 1e-9, "roundtrip drift too large");
        }
    }

    #[test]
    fn kernels_reject_bad_inputs() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0; // asymmetric
        assert!(spd_expm(&m).is_err());
        assert!(spd_logm(&diag(&[1.0, -0.5])).is_err());
        assert!(spd_sqrtm(&diag(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn inner_examples() {
        let spd = Spd::new(2).unwrap();
        let eye = spd.identity();
        assert_relative_eq!(spd.inner(&eye, &eye, &eye), 2.0, epsilon = 1e-14);
        let w = diag(&[2.0, 2.0]);
        assert_relative_eq!(spd.inner(&w, &eye, &eye), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn norm_example() {
        let spd = Spd::new(2).unwrap();
        let eye = spd.identity();
        assert_relative_eq!(
            spd.norm(&eye, &diag(&[1.0, 1.0])),
            2.0f64.sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn exp_log_diagonal_examples() {
        let spd = Spd::new(2).unwrap();
        let eye = spd.identity();
        let xi = diag(&[1.0, 0.0]);
        let out = spd.exp(&eye, &xi);
        assert_relative_eq!(out, diag(&[std::f64::consts::E, 1.0]), epsilon = 1e-12);
        let back = spd.log(&eye, &out).unwrap();
        assert_relative_eq!(back, xi, epsilon = 1e-12);
    }

    #[test]
    fn exp_zero_is_identity_map() {
        let spd = Spd::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_spd_point(&spd, 1.0, &mut rng);
        assert_eq!(spd.exp(&w, &DMatrix::zeros(3, 3)), w);
    }

    #[test]
    fn dist_example() {
        let spd = Spd::new(2).unwrap();
        let eye = spd.identity();
        let e2 = std::f64::consts::E.powi(2);
        assert_relative_eq!(
            spd.dist(&eye, &diag(&[e2, e2])),
            2.0 * 2.0f64.sqrt(),
            epsilon = 1e-12
        );
        assert_eq!(spd.dist(&eye, &eye), 0.0);
    }

    #[test]
    fn egrad_identity_example() {
        let spd = Spd::new(2).unwrap();
        let eye = spd.identity();
        let e = random_symmetric(2, 1.0, &mut ChaCha8Rng::seed_from_u64(3));
        assert_relative_eq!(spd.egrad_to_rgrad(&eye, &e).unwrap(), e, epsilon = 1e-14);
    }

    #[test]
    fn vectorize_offdiagonal_scaling() {
        let spd = Spd::new(2).unwrap();
        let eye = spd.identity();
        let mut u = DMatrix::zeros(2, 2);
        u[(0, 1)] = 1.0;
        u[(1, 0)] = 1.0;
        let coords = spd.vectorize(&eye, &u);
        assert_relative_eq!(coords[2], 2.0f64.sqrt(), epsilon = 1e-15);
        assert_eq!(coords[0], 0.0);
        assert_eq!(coords[1], 0.0);
        let back = spd.unvectorize(&eye, &coords).unwrap();
        assert_relative_eq!(back, u, epsilon = 1e-15);
    }

    #[test]
    fn vectorize_is_frobenius_isometry() {
        let spd = Spd::new(4).unwrap();
        let eye = spd.identity();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let u = random_symmetric(4, 1.0, &mut rng);
            let coords = spd.vectorize(&eye, &u);
            assert_relative_eq!(coords.norm(), u.norm(), epsilon = 1e-12);
        }
    }

    #[test]
    fn metric_tensor_identity() {
        let spd = Spd::new(2).unwrap();
        let g = spd.metric_tensor(&spd.identity()).unwrap();
        assert_relative_eq!(g, DMatrix::identity(3, 3), epsilon = 1e-12);
    }

    #[test]
    fn metric_tensor_scaled_identity() {
        // At W = diag(2, 2) the inner product contracts by 1/4 per factor of
        // W^-1 under the trace: G = I/4, eigenvalues all 1/4. Cross-checked
        // against inner(I, I) = 0.5 with vec(I) = (1, 1, 0).
        let spd = Spd::new(2).unwrap();
        let w = diag(&[2.0, 2.0]);
        let g = spd.metric_tensor(&w).unwrap();
        assert_relative_eq!(g, DMatrix::identity(3, 3) * 0.25, epsilon = 1e-12);
        let coords = DVector::from_row_slice(&[1.0, 1.0, 0.0]);
        let quad = (g * &coords).dot(&coords);
        assert_relative_eq!(
            quad,
            spd.inner(&w, &spd.identity(), &spd.identity()),
            epsilon = 1e-12
        );
    }

    #[test]
    fn metric_tensor_consistent_with_inner() {
        let spd = Spd::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let w = random_spd_point(&spd, 1.0, &mut rng);
            let u = random_symmetric(3, 1.0, &mut rng);
            let v = random_symmetric(3, 1.0, &mut rng);
            let g = spd.metric_tensor(&w).unwrap();
            let via_tensor = (&g * spd.vectorize(&w, &v)).dot(&spd.vectorize(&w, &u));
            let direct = spd.inner(&w, &u, &v);
            assert!((via_tensor - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn metric_tensor_unsupported_for_large_r() {
        let spd = Spd::new(9).unwrap();
        assert!(matches!(
            spd.metric_tensor(&spd.identity()),
            Err(GeometryError::Unsupported(_))
        ));
    }

    #[test]
    fn descriptor_dimension() {
        let spd = Spd::new(4).unwrap();
        assert_eq!(spd.descriptor().intrinsic_dim, 10);
    }

    #[test]
    fn frechet_loss_examples() {
        let spd = Spd::new(2).unwrap();
        let eye = spd.identity();
        assert_eq!(frechet_loss(&spd, &eye, &eye), 0.0);
        let x = diag(&[std::f64::consts::E, std::f64::consts::E]);
        assert_relative_eq!(frechet_loss(&spd, &eye, &x), 2.0, epsilon = 1e-12);
        assert_relative_eq!(
            frechet_loss(&spd, &eye, &x),
            frechet_loss(&spd, &x, &eye),
            epsilon = 1e-12
        );
    }

    #[test]
    fn frechet_rgrad_examples() {
        let spd = Spd::new(2).unwrap();
        let eye = spd.identity();
        assert_relative_eq!(
            frechet_rgrad(&spd, &eye, &eye, Convention::Exact).unwrap(),
            DMatrix::zeros(2, 2),
            epsilon = 1e-14
        );
        let x = diag(&[std::f64::consts::E, std::f64::consts::E]);
        assert_relative_eq!(
            frechet_rgrad(&spd, &eye, &x, Convention::Exact).unwrap(),
            diag(&[-2.0, -2.0]),
            epsilon = 1e-12
        );
        // The literal convention is the negative half of the exact gradient.
        assert_relative_eq!(
            frechet_rgrad(&spd, &eye, &x, Convention::Literal).unwrap(),
            diag(&[1.0, 1.0]),
            epsilon = 1e-12
        );
    }

    #[test]
    fn frechet_grad_norm_is_twice_distance() {
        let spd = Spd::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let w = random_spd_point(&spd, 1.0, &mut rng);
            let x = random_spd_point(&spd, 1.0, &mut rng);
            let g = frechet_rgrad(&spd, &w, &x, Convention::Exact).unwrap();
            let lhs = spd.norm(&w, &g);
            let rhs = 2.0 * spd.dist(&w, &x);
            assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs));
        }
    }

    #[test]
    fn frechet_lipschitz_modes() {
        let p = DomainProfile::new(1.0, 1.0).unwrap().with_diameter(1.0);
        assert_eq!(frechet_lipschitz(&p, Convention::Exact).unwrap(), 2.0);
        assert_eq!(frechet_lipschitz(&p, Convention::Literal).unwrap(), 1.0);
        let degenerate = DomainProfile::new(1.0, 1.0).unwrap().with_diameter(0.0);
        assert!(frechet_lipschitz(&degenerate, Convention::Exact).is_err());
        let missing = DomainProfile::new(1.0, 1.0).unwrap();
        assert!(frechet_lipschitz(&missing, Convention::Exact).is_err());
    }

    #[test]
    fn exact_one_step_solve() {
        // With the exact gradient and stepsize 1/2, one noiseless step from
        // any W lands on the single sample.
        let spd = Spd::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let w0 = random_spd_point(&spd, 1.5, &mut rng);
            let x = random_spd_point(&spd, 1.5, &mut rng);
            let profile = DomainProfile::new(1.0, 1.0).unwrap();
            let obj = FrechetObjective::new(vec![x.clone()], profile, Convention::Exact).unwrap();
            let grad = obj.full_rgrad(&w0);
            let step = spd.lincomb(-0.5, &grad, 0.0, &DMatrix::zeros(2, 2));
            let w1 = spd.exp(&w0, &step);
            assert!(spd.dist(&w1, &x) <= 1e-8);
        }
    }

    #[test]
    fn congruence_invariance_of_distance() {
        let spd = Spd::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let w = random_spd_point(&spd, 1.0, &mut rng);
            let x = random_spd_point(&spd, 1.0, &mut rng);
            // Random invertible congruence M.
            let m = DMatrix::from_fn(3, 3, |_, _| rng.sample::<f64, _>(StandardNormal))
                + DMatrix::identity(3, 3) * 2.0;
            let mw = symmetrize(&(&m * &w * m.transpose()));
            let mx = symmetrize(&(&m * &x * m.transpose()));
            assert!((spd.dist(&mw, &mx) - spd.dist(&w, &x)).abs() <= 1e-8);
        }
    }

    #[test]
    fn geodesic_strong_convexity_modulus_two() {
        let spd = Spd::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let samples: Vec<DMatrix<f64>> = (0..5)
            .map(|_| random_spd_point(&spd, 0.5, &mut rng))
            .collect();
        let obj = FrechetObjective::new(
            samples,
            DomainProfile::new(1.0, 1.0).unwrap(),
            Convention::Exact,
        )
        .unwrap();
        for _ in 0..60 {
            let a = random_spd_point(&spd, 0.8, &mut rng);
            let b = random_spd_point(&spd, 0.8, &mut rng);
            let log_ab = spd.log(&a, &b).unwrap();
            let d2 = frechet_loss(&spd, &a, &b);
            for &t in &[0.25, 0.5, 0.75] {
                let gamma = spd.exp(&a, &(log_ab.clone() * t));
                let lhs = obj.loss(&gamma);
                let rhs = (1.0 - t) * obj.loss(&a) + t * obj.loss(&b) - t * (1.0 - t) * d2;
                assert!(
                    lhs <= rhs + 1e-7,
                    "strong convexity violated: {lhs} > {rhs}"
                );
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use crate::objective::loss_directional_derivative;
        let spd = Spd::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let samples: Vec<DMatrix<f64>> = (0..4)
            .map(|_| random_spd_point(&spd, 0.5, &mut rng))
            .collect();
        let obj = FrechetObjective::new(
            samples,
            DomainProfile::new(1.0, 1.0).unwrap(),
            Convention::Exact,
        )
        .unwrap();
        for _ in 0..30 {
            let w = random_spd_point(&spd, 0.5, &mut rng);
            let dir = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
            let dir = &dir / dir.norm();
            let grad = obj.full_rgrad(&w);
            let dir_t = spd.unvectorize(&w, &dir).unwrap();
            let analytic = spd.inner(&w, &grad, &dir_t);
            let numeric = loss_directional_derivative(&obj, &w, &dir, 1e-5);
            assert!(
                (analytic - numeric).abs() <= 1e-5 * (1.0 + analytic.abs()),
                "finite-difference mismatch: {analytic} vs {numeric}"
            );
        }
    }

    #[test]
    fn noiseless_descent_converges_linearly() {
        let spd = Spd::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<DMatrix<f64>> = (0..6)
            .map(|_| random_spd_point(&spd, 0.5, &mut rng))
            .collect();
        let obj = FrechetObjective::new(
            samples,
            DomainProfile::new(1.0, 1.0).unwrap(),
            Convention::Exact,
        )
        .unwrap();
        let mut w = spd.identity();
        let mut norms = Vec::new();
        for _ in 0..200 {
            let grad = obj.full_rgrad(&w);
            let gn = spd.norm(&w, &grad);
            norms.push(gn);
            if gn <= 1e-10 {
                break;
            }
            w = spd.exp(&w, &(grad * -0.5));
        }
        assert!(
            norms.last().unwrap() <= &1e-10,
            "gradient norm stalled at {:?}",
            norms.last()
        );
        for pair in norms.windows(2).skip(1) {
            assert!(
                pair[1] <= pair[0] * (1.0 + 1e-12),
                "gradient norm not monotone"
            );
        }
    }

    #[test]
    fn objective_rejects_diameter_violation() {
        let spd = Spd::new(2).unwrap();
        let far = spd.exp(&spd.identity(), &diag(&[3.0, 3.0]));
        let profile = DomainProfile::new(1.0, 1.0).unwrap().with_diameter(1.0);
        let res = FrechetObjective::new(vec![spd.identity(), far], profile, Convention::Exact);
        assert!(res.is_err());
    }

    #[test]
    fn kernel_cache_reconstruction_invariant() {
        let spd = Spd::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let w = random_spd_point(&spd, 1.0, &mut rng);
        let cache = SpdKernelCache::new(&w).unwrap();
        let recon = cache.eigenvectors()
            * DMatrix::from_diagonal(cache.eigenvalues())
            * cache.eigenvectors().transpose();
        assert!((recon - &w).norm() <= 1e-10 * w.norm());
        assert!(cache.eigenvalues().min() > 0.0);
        assert_relative_eq!(cache.sqrt() * cache.sqrt(), w.clone(), epsilon = 1e-10);
        assert_relative_eq!(
            cache.sqrt() * cache.inv_sqrt(),
            DMatrix::identity(4, 4),
            epsilon = 1e-10
        );
    }
}
