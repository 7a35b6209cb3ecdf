//! Tour of the sphere geometry: exponential/logarithm maps, distances,
//! tangent coordinates, and the checked point/tangent types.

use dp_riemopt::manifold::{geodesic_average_step, Geometry, ManifoldPoint};
use dp_riemopt::sphere::Sphere;
use nalgebra::DVector;

fn main() {
    let sphere = Sphere::new(4).unwrap(); // S^3 in R^4
    println!("{:?}", sphere.descriptor());

    let e0 = {
        let mut v = DVector::zeros(4);
        v[0] = 1.0;
        v
    };
    let e1 = {
        let mut v = DVector::zeros(4);
        v[1] = 1.0;
        v
    };
    let a = ManifoldPoint::new(sphere, e0).unwrap();
    let b = ManifoldPoint::new(sphere, e1).unwrap();

    // Quarter circle between coordinate axes.
    let log = a.log(&b).unwrap();
    println!(
        "log_a(b) has norm {:.6} (= pi/2 = {:.6})",
        log.norm(),
        std::f64::consts::FRAC_PI_2
    );
    let back = a.exp(&log).unwrap();
    println!(
        "Exp_a(Log_a(b)) lands at distance {:.2e} from b",
        back.distance(&b).unwrap()
    );

    // The geodesic midpoint via the running-average helper.
    let mid = geodesic_average_step(&a, &b, 0.5).unwrap();
    println!("midpoint coordinates: {:.4?}", mid.value().as_slice());

    // Tangent coordinates are an isometry: the metric tensor is the identity.
    let coords = DVector::from_vec(vec![0.3, -0.2, 0.5]);
    let xi = a.tangent_from_coords(&coords).unwrap();
    println!(
        "|coords| = {:.6}, |xi|_w = {:.6}, radial component = {:.2e}",
        coords.norm(),
        xi.norm(),
        a.value().dot(xi.value())
    );

    // Ambient gradients project onto the tangent space.
    let ambient = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
    let grad = a.rgrad_from_ambient(&ambient).unwrap();
    println!("projected gradient: {:.4?}", grad.value().as_slice());

    // A walk of geodesic steps stays on the sphere.
    let mut w = a.clone();
    for k in 0..5 {
        let step = w
            .tangent_from_coords(&DVector::from_vec(vec![0.2, 0.1 * k as f64, -0.1]))
            .unwrap();
        w = w.exp(&step).unwrap();
    }
    println!(
        "after 5 steps: |w| - 1 = {:.2e}, dist to start = {:.4}",
        w.value().norm() - 1.0,
        w.distance(&a).unwrap()
    );
}
