//! The SPD manifold under the affine-invariant metric: matrix kernels,
//! geodesics, the Fréchet-mean objective, and its strong convexity.

use dp_riemopt::manifold::{DomainProfile, Geometry};
use dp_riemopt::objective::{Convention, Objective};
use dp_riemopt::spd::{spd_expm, spd_logm, spd_sqrtm, FrechetObjective, Spd};
use nalgebra::{DMatrix, DVector};

fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_row_slice(values))
}

fn main() {
    let spd = Spd::new(2).unwrap();
    println!("{:?}", spd.descriptor());

    // Matrix kernels via symmetric eigendecomposition.
    println!(
        "sqrtm(diag(4, 9))  = {:?}",
        spd_sqrtm(&diag(&[4.0, 9.0])).unwrap().as_slice()
    );
    println!(
        "logm(diag(e, e^2)) = {:?}",
        spd_logm(&diag(&[std::f64::consts::E, std::f64::consts::E.powi(2)]))
            .unwrap()
            .as_slice()
    );
    println!(
        "expm(0)            = {:?}",
        spd_expm(&DMatrix::zeros(2, 2)).unwrap().as_slice()
    );

    // Geodesic between two commuting matrices.
    let w = spd.identity();
    let x = diag(&[2.0, 0.5]);
    let log = spd.log(&w, &x).unwrap();
    println!(
        "dist(I, diag(2, 1/2)) = {:.6}; |Log|_W = {:.6}",
        spd.dist(&w, &x),
        spd.norm(&w, &log)
    );
    let halfway = spd.exp(&w, &(log * 0.5));
    println!(
        "geodesic midpoint: {:?} (the matrix square root)",
        halfway.as_slice()
    );

    // The Fréchet objective: mean squared distance to a sample set.
    let samples = vec![diag(&[1.3, 0.9]), diag(&[0.8, 1.1]), diag(&[1.0, 1.2])];
    let profile = DomainProfile::new(2.0, 1.0).unwrap().with_diameter(2.0);
    let objective = FrechetObjective::new(samples, profile, Convention::Exact).unwrap();
    let grad = objective.full_rgrad(&w);
    println!(
        "F(I) = {:.6}, |grad F(I)|_I = {:.6}",
        objective.loss(&w),
        spd.norm(&w, &grad)
    );

    // One half-step of the exact gradient onto a single sample solves n = 1.
    let single = FrechetObjective::new(
        vec![x.clone()],
        DomainProfile::new(2.0, 1.0).unwrap().with_diameter(2.0),
        Convention::Exact,
    )
    .unwrap();
    let g = single.full_rgrad(&w);
    let landed = spd.exp(&w, &spd.lincomb(-0.5, &g, 0.0, &DMatrix::zeros(2, 2)));
    println!(
        "one half-step from I lands at dist {:.2e} of the sample",
        spd.dist(&landed, &x)
    );

    // Strong convexity along a geodesic: F(gamma(t)) sits below the chord
    // minus the modulus-2 correction.
    let a = diag(&[1.4, 0.7]);
    let b = diag(&[0.9, 1.3]);
    let log_ab = spd.log(&a, &b).unwrap();
    let d2 = spd.dist(&a, &b).powi(2);
    for t in [0.25, 0.5, 0.75] {
        let gamma = spd.exp(&a, &(log_ab.clone() * t));
        let lhs = objective.loss(&gamma);
        let chord = (1.0 - t) * objective.loss(&a) + t * objective.loss(&b);
        println!(
            "t = {t:.2}: F(gamma) = {:.6} <= chord - t(1-t) d^2 = {:.6}",
            lhs,
            chord - t * (1.0 - t) * d2
        );
    }
}
