#![allow(dead_code)]

use epsharm::mobius::{compose, MobiusMatrix};
use epsharm::sphere::{local_derivatives, MapField, QuadratureGrid};
use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::Rng;

pub fn random_su2<R: Rng>(rng: &mut R) -> MobiusMatrix {
    let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a = Complex64::new(v[0], v[1]) / n;
    let b = Complex64::new(v[2], v[3]) / n;
    MobiusMatrix::new(a, -b.conj(), b, a.conj()).unwrap()
}

/// `U·diag(√λ, 1/√λ)·V*` with Haar-ish `U, V` and `λ` uniform in `[1, max_lambda)`.
pub fn random_mobius<R: Rng>(rng: &mut R, max_lambda: f64) -> MobiusMatrix {
    let lambda = rng.gen_range(1.0..max_lambda);
    let u = random_su2(rng);
    let v = random_su2(rng);
    compose(&compose(&u, &MobiusMatrix::dilation(lambda)), &v.adjoint())
}

/// Brute-force oracle over pure dilations along the x₃-axis: grid search
/// on `[1, 1.5]` followed by golden-section refinement.
pub fn dilation_grid_search(u: &MapField, grid: &QuadratureGrid) -> f64 {
    let objective = |lambda: f64| {
        let pulled = u.precompose(MobiusMatrix::dilation(1.0 / lambda));
        let mut acc = 0.0;
        for n in grid.nodes() {
            let d = local_derivatives(&pulled, &n.point).unwrap();
            let x = n.point.vec();
            let p = Matrix3::identity() - x * x.transpose();
            acc += n.weight * (d.gradient() - p).norm_squared();
        }
        acc
    };
    let steps = 500;
    let best = (0..=steps)
        .map(|i| 1.0 + 0.5 * i as f64 / steps as f64)
        .min_by(|a, b| objective(*a).total_cmp(&objective(*b)))
        .unwrap();
    let (mut lo, mut hi) = ((best - 1e-3).max(1.0), (best + 1e-3).min(1.5));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if objective(a) <= objective(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}
