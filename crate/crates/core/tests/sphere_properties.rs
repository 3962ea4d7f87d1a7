use std::f64::consts::PI;

use epsharm::maps::{PolynomialWarp, Twist};
use epsharm::mobius::MobiusMatrix;
use epsharm::sphere::{
    build_grid, integrate, local_derivatives, local_derivatives_in, Chart, DerivativeMode, MapField, SpherePoint, Vec3,
};
use proptest::prelude::*;

fn point_in_band(lo: f64, hi: f64) -> impl Strategy<Value = SpherePoint> {
    (lo..hi, any::<bool>(), 0.0..2.0 * PI).prop_map(|(h, up, phi)| {
        let z = if up { h } else { -h };
        let s = (1.0 - z * z).sqrt();
        SpherePoint::normalize(Vec3::new(s * phi.cos(), s * phi.sin(), z))
    })
}

fn any_point() -> impl Strategy<Value = SpherePoint> {
    (-0.999..0.999f64, 0.0..2.0 * PI).prop_map(|(z, phi)| {
        let s = (1.0 - z * z).sqrt();
        SpherePoint::normalize(Vec3::new(s * phi.cos(), s * phi.sin(), z))
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn north_and_south_charts_agree(x in point_in_band(0.4, 0.6), amp in 0.0..0.4f64, fd in any::<bool>()) {
        let mode = if fd { DerivativeMode::FiniteDifference } else { DerivativeMode::Analytic };
        let u = MapField::from_map(PolynomialWarp { amplitude: amp }).with_mode(mode);
        let n = local_derivatives_in(&u, &x, Chart::North).unwrap();
        let s = local_derivatives_in(&u, &x, Chart::South).unwrap();
        let scale = n.gradient().norm().max(1.0);
        prop_assert!((n.gradient() - s.gradient()).norm() / scale < 1e-7);
        let scale = n.laplacian().norm().max(1.0);
        prop_assert!((n.laplacian() - s.laplacian()).norm() / scale < 1e-7);
    }

    #[test]
    fn finite_differences_match_jets_for_dilations(x in any_point(), lambda in 1.0..3.0f64) {
        let m = MobiusMatrix::dilation(lambda);
        let a = local_derivatives(&MapField::from_map(m), &x).unwrap();
        let f = local_derivatives(&MapField::from_map(m).with_mode(DerivativeMode::FiniteDifference), &x).unwrap();
        prop_assert!((a.gradient() - f.gradient()).norm() / a.gradient().norm() < 1e-7);
        prop_assert!((a.laplacian() - f.laplacian()).norm() / a.laplacian().norm().max(1.0) < 1e-7);
    }

    #[test]
    fn laplacian_splits_into_tangent_and_normal_parts(x in any_point(), amount in -2.0..2.0f64, amp in 0.0..0.4f64) {
        for u in [
            MapField::from_map(Twist { amount }),
            MapField::from_map(PolynomialWarp { amplitude: amp }),
        ] {
            let d = local_derivatives(&u, &x).unwrap();
            let lap = d.laplacian();
            let tangent = lap - d.value * d.value.dot(&lap);
            let g2 = d.gradient_sq();
            let lhs = lap.norm_squared();
            prop_assert!(rel(lhs, tangent.norm_squared() + g2 * g2) < 1e-10);
            // u·∂u = 0 in both chart directions.
            prop_assert!(d.value.dot(&d.ds).abs() < 1e-12 * d.ds.norm().max(1.0));
            prop_assert!(d.value.dot(&d.dt).abs() < 1e-12 * d.dt.norm().max(1.0));
        }
    }

    #[test]
    fn polar_polynomials_integrate_exactly(n in 2usize..12, seed in prop::collection::vec(-1.0..1.0f64, 24)) {
        let grid = build_grid(n, 8).unwrap();
        let deg = 2 * n - 1;
        let coeffs = &seed[..=deg.min(23)];
        let got = integrate(|x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x.vec()[2] + c), &grid).unwrap();
        // ∫ t^j over [-1,1] is 2/(j+1) for even j.
        let exact: f64 = coeffs
            .iter()
            .enumerate()
            .filter(|(j, _)| j % 2 == 0)
            .map(|(j, c)| c * 2.0 / (j as f64 + 1.0))
            .sum::<f64>()
            * 2.0
            * PI;
        prop_assert!(rel(got, exact) < 1e-12, "{} vs {}", got, exact);
    }
}

#[test]
fn azimuthal_band_limit_is_respected() {
    let grid = build_grid(4, 9).unwrap();
    for m in 1..9 {
        let v = integrate(|x| x.vec()[1].atan2(x.vec()[0]).mul_add(m as f64, 0.0).cos(), &grid).unwrap();
        assert!(v.abs() < 1e-12, "mode {m}: {v}");
    }
}
