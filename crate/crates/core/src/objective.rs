//! Finite-sum objectives over a geometry, as consumed by the optimizer.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::manifold::Geometry;

/// Which gradient/Lipschitz convention an objective uses.
///
/// `Exact` is the default: the exact Riemannian gradient of the stated loss
/// together with a Lipschitz constant that genuinely bounds its norm (never
/// under-calibrates noise). `Literal` reproduces the published formulas
/// verbatim (looser Lipschitz estimate on the sphere, half-scale ascent
/// direction for the Fréchet objective); it exists for faithful reproduction
/// and is selected by the CLI's `--paper-faithful` flag.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    #[default]
    Exact,
    Literal,
}

/// A finite-sum objective `F(w) = mean_i f(w; z_i)`.
pub trait Objective<G: Geometry>: Send + Sync {
    fn geometry(&self) -> &G;

    fn num_samples(&self) -> usize;

    /// Per-sample loss `f(w; z_i)`.
    fn sample_loss(&self, point: &G::Point, idx: usize) -> f64;

    /// Per-sample Riemannian gradient `grad f(w; z_i)`.
    fn sample_rgrad(&self, point: &G::Point, idx: usize) -> G::Tangent;

    fn loss(&self, point: &G::Point) -> f64 {
        let n = self.num_samples();
        (0..n).map(|i| self.sample_loss(point, i)).sum::<f64>() / n as f64
    }

    /// Mean gradient over a batch of sample indices.
    fn batch_rgrad(&self, point: &G::Point, indices: &[usize]) -> G::Tangent {
        let geo = self.geometry();
        let mut acc = geo.zero_tangent(point);
        for &i in indices {
            let g = self.sample_rgrad(point, i);
            acc = geo.lincomb(1.0, &acc, 1.0, &g);
        }
        let zero = geo.zero_tangent(point);
        geo.lincomb(1.0 / indices.len() as f64, &acc, 0.0, &zero)
    }

    /// Full gradient `grad F(w)`. Implementations may use a cached closed
    /// form; the default averages per-sample gradients.
    fn full_rgrad(&self, point: &G::Point) -> G::Tangent {
        let indices: Vec<usize> = (0..self.num_samples()).collect();
        self.batch_rgrad(point, &indices)
    }
}

/// Directional derivative of `loss` at `point` along the tangent coordinates
/// direction, by central finite differences of size `h`. Test / diagnostic
/// helper; lives here so both geometries share it.
pub fn loss_directional_derivative<G, O>(
    objective: &O,
    point: &G::Point,
    direction_coords: &DVector<f64>,
    h: f64,
) -> f64
where
    G: Geometry,
    O: Objective<G>,
{
    let geo = objective.geometry();
    let dir = geo
        .unvectorize(point, direction_coords)
        .expect("direction coordinates must have intrinsic dimension");
    let zero = geo.zero_tangent(point);
    let fwd = geo.exp(point, &geo.lincomb(h, &dir, 0.0, &zero));
    let bwd = geo.exp(point, &geo.lincomb(-h, &dir, 0.0, &zero));
    (objective.loss(&fwd) - objective.loss(&bwd)) / (2.0 * h)
}
