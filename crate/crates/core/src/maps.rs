//! A small zoo of explicit maps S² → S² used as inputs and test fixtures.

use crate::jet::Scalar;
use crate::sphere::SphereMap;

#[derive(Clone, Copy, Debug)]
pub struct Identity;

impl SphereMap for Identity {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> [S; 3] {
        x
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Constant(pub [f64; 3]);

impl Constant {
    pub fn north() -> Self {
        Self([0.0, 0.0, 1.0])
    }
}

impl SphereMap for Constant {
    fn eval<S: Scalar>(&self, _x: [S; 3]) -> [S; 3] {
        self.0.map(S::cst)
    }
}

/// `x ↦ −x`.
#[derive(Clone, Copy, Debug)]
pub struct Antipodal;

impl SphereMap for Antipodal {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> [S; 3] {
        [-x[0], -x[1], -x[2]]
    }
}

/// Rotation about the z-axis by an angle proportional to the height,
/// `x ↦ R_z(amount·x₃) x`. A degree-one diffeomorphism, not conformal.
#[derive(Clone, Copy, Debug)]
pub struct Twist {
    pub amount: f64,
}

impl SphereMap for Twist {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> [S; 3] {
        let a = x[2] * self.amount;
        let (s, c) = (a.sin(), a.cos());
        [x[0] * c - x[1] * s, x[0] * s + x[1] * c, x[2]]
    }
}

/// `x ↦ (x + amplitude·∇p)/|x + amplitude·∇p|` where `p = ½(3x₃² − 1)` is
/// the zonal degree-two harmonic and `∇p = 3x₃(e₃ − x₃x)` its sphere gradient.
#[derive(Clone, Copy, Debug)]
pub struct ZonalPerturbation {
    pub amplitude: f64,
}

impl SphereMap for ZonalPerturbation {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> [S; 3] {
        let z = x[2];
        let g = z * (3.0 * self.amplitude);
        let v = [x[0] - x[0] * z * g, x[1] - x[1] * z * g, z + g - z * z * g];
        normalize(v)
    }
}

/// Radial projection of a nonvanishing polynomial vector field.
/// `v(x) = x + amplitude·(x₂x₃, x₃x₁ + x₁², x₁x₂)`.
#[derive(Clone, Copy, Debug)]
pub struct PolynomialWarp {
    pub amplitude: f64,
}

impl SphereMap for PolynomialWarp {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> [S; 3] {
        let a = self.amplitude;
        let v = [x[0] + x[1] * x[2] * a, x[1] + (x[2] * x[0] + x[0] * x[0]) * a, x[2] + x[0] * x[1] * a];
        normalize(v)
    }
}

pub fn normalize<S: Scalar>(v: [S; 3]) -> [S; 3] {
    let inv = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().recip();
    [v[0] * inv, v[1] * inv, v[2] * inv]
}

/// Precomposition of two generic maps, `x ↦ outer(inner(x))`.
#[derive(Clone, Copy, Debug)]
pub struct Compose<A, B> {
    pub outer: A,
    pub inner: B,
}

impl<A: SphereMap, B: SphereMap> SphereMap for Compose<A, B> {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> [S; 3] {
        self.outer.eval(self.inner.eval(x))
    }
}
