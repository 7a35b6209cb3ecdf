//! Synthetic data generators for the two benchmark studies.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::ExperimentError;
use crate::manifold::{Geometry, Tolerances};
use crate::spd::{Spd, SpdKernelCache};

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Thin QR orthonormalization with the R-diagonal sign fixed positive, so the
/// factor is a deterministic function of the input.
fn orthonormal_columns(m: DMatrix<f64>) -> DMatrix<f64> {
    let cols = m.ncols();
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            for i in 0..q.nrows() {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Sample matrix for the leading-eigenvector study: `Z = U S V` with random
/// column-orthonormal `U` (n x (d+1)) and orthogonal `V`, where the diagonal
/// `S` carries a planted spectrum `1, 1 - 1.1 nu, ..., 1 - 1.4 nu` followed
/// by `|x_k| / (d+1)` noise entries. `Z` then has exactly the spectrum of
/// `S`. Rows of `Z` are the returned samples.
pub fn generate_pca_data<R: Rng + ?Sized>(
    n: usize,
    d_plus_1: usize,
    nu: f64,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>, ExperimentError> {
    if d_plus_1 < 6 {
        return Err(ExperimentError::Config(format!(
            "the planted spectrum needs d+1 >= 6, got {d_plus_1}"
        )));
    }
    if n < d_plus_1 {
        return Err(ExperimentError::Config(format!(
            "need n >= d+1 for a column-orthonormal factor, got n={n}, d+1={d_plus_1}"
        )));
    }
    if !(nu > 0.0) {
        return Err(ExperimentError::Config(format!(
            "eigengap nu must be positive, got {nu}"
        )));
    }
    let mut spectrum = DVector::zeros(d_plus_1);
    spectrum[0] = 1.0;
    for k in 1..5 {
        spectrum[k] = 1.0 - (1.0 + 0.1 * k as f64) * nu;
    }
    for k in 5..d_plus_1 {
        let x: f64 = rng.sample(StandardNormal);
        spectrum[k] = x.abs() / d_plus_1 as f64;
    }
    let u = orthonormal_columns(gaussian_matrix(n, d_plus_1, rng));
    let v = orthonormal_columns(gaussian_matrix(d_plus_1, d_plus_1, rng));
    let z = u * DMatrix::from_diagonal(&spectrum) * v;
    Ok((0..n).map(|i| z.row(i).transpose()).collect())
}

/// Planted spectrum's top eigengap: `lambda_1 - lambda_2 = 1.1 nu`.
pub fn pca_planted_eigengap(nu: f64) -> f64 {
    1.1 * nu
}

/// Wishart samples `X = G G^T / r` conditioned on `dist(X, I) <= D/2` (so the
/// set has pairwise diameter at most `D`) and on numerical positive
/// definiteness. Errors when the acceptance rate collapses.
pub fn generate_wishart_spd<R: Rng + ?Sized>(
    n: usize,
    r: usize,
    diameter: f64,
    rng: &mut R,
) -> Result<Vec<DMatrix<f64>>, ExperimentError> {
    if r < 2 {
        return Err(ExperimentError::Config(format!(
            "Wishart study needs r >= 2, got {r}"
        )));
    }
    if !(diameter > 0.0) {
        return Err(ExperimentError::Config(format!(
            "diameter must be positive, got {diameter}"
        )));
    }
    let spd = Spd::new(r).expect("r >= 2");
    let identity = spd.identity();
    let identity_cache = SpdKernelCache::new(&identity).expect("identity is SPD");
    let tol = Tolerances::default();
    let mut samples = Vec::with_capacity(n);
    let mut attempts: u64 = 0;
    let mut accepted: u64 = 0;
    while samples.len() < n {
        attempts += 1;
        if attempts >= 1_000_000 && (accepted as f64 / attempts as f64) < 1e-4 {
            return Err(ExperimentError::Config(format!(
                "Wishart acceptance rate below 1e-4 after {attempts} attempts; increase the diameter bound {diameter}"
            )));
        }
        let g = gaussian_matrix(r, r, rng);
        let x = (&g * g.transpose()) / r as f64;
        let x = (&x + x.transpose()) * 0.5;
        if spd.check_point(&x, &tol).is_err() {
            continue;
        }
        if identity_cache.dist_to(&x) > diameter / 2.0 {
            continue;
        }
        accepted += 1;
        samples.push(x);
    }
    Ok(samples)
}
