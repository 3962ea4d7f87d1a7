//! SL(2,ℂ) modulo ±1 acting on S² by fractional-linear maps.
//!
//! On the sphere a matrix acts through the Hermitian model: the point `x`
//! is encoded as the rank-one projector `½(I + H(x))` with
//! `H(x) = [[x₃, x₁+ix₂], [x₁−ix₂, −x₃]]`, and `M` sends it to the
//! normalized `M(I + H)M*`. This agrees with `ξ ↦ (aξ+b)/(cξ+d)` in the
//! north chart and never passes through the point at infinity.

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jet::Scalar;
use crate::sphere::{SphereMap, SpherePoint, Vec3};

type C = Complex64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobiusMatrix {
    a: C,
    b: C,
    c: C,
    d: C,
}

impl MobiusMatrix {
    /// Scales to unit determinant and fixes the projective sign.
    pub fn new(a: C, b: C, c: C, d: C) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() < 1e-14 || !det.is_finite() {
            return Err(Error::Singular { det: det.norm() });
        }
        let s = det.sqrt();
        Ok(Self { a: a / s, b: b / s, c: c / s, d: d / s }.canonical())
    }

    /// From eight reals, real and imaginary parts interleaved.
    pub fn from_reals(v: [f64; 8]) -> Result<Self> {
        Self::new(C::new(v[0], v[1]), C::new(v[2], v[3]), C::new(v[4], v[5]), C::new(v[6], v[7]))
    }

    pub fn identity() -> Self {
        Self { a: C::new(1.0, 0.0), b: C::new(0.0, 0.0), c: C::new(0.0, 0.0), d: C::new(1.0, 0.0) }
    }

    /// `diag(λ^{1/2}, λ^{-1/2})`, acting as `ξ ↦ λξ`.
    pub fn dilation(lambda: f64) -> Self {
        let s = lambda.sqrt();
        Self { a: C::new(s, 0.0), b: C::new(0.0, 0.0), c: C::new(0.0, 0.0), d: C::new(1.0 / s, 0.0) }
    }

    /// `diag(e^{iα/2}, e^{-iα/2})`, the rotation by `α` about the x₃-axis.
    pub fn rotation_z(alpha: f64) -> Self {
        let h = C::new(0.0, alpha / 2.0).exp();
        Self { a: h, b: C::new(0.0, 0.0), c: C::new(0.0, 0.0), d: h.conj() }.canonical()
    }

    pub fn entries(&self) -> [C; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn to_reals(&self) -> [f64; 8] {
        let [a, b, c, d] = self.entries();
        [a.re, a.im, b.re, b.im, c.re, c.im, d.re, d.im]
    }

    pub fn det(&self) -> C {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }.canonical()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.adjoint_raw().canonical()
    }

    fn adjoint_raw(&self) -> Self {
        Self { a: self.a.conj(), b: self.c.conj(), c: self.b.conj(), d: self.d.conj() }
    }

    /// Frobenius distance between the classes of `self` and `other` in PSL(2,ℂ).
    pub fn projective_distance(&self, other: &Self) -> f64 {
        let x = self.entries();
        let y = other.entries();
        let minus: f64 = x.iter().zip(&y).map(|(p, q)| (p - q).norm_sqr()).sum();
        let plus: f64 = x.iter().zip(&y).map(|(p, q)| (p + q).norm_sqr()).sum();
        minus.min(plus).sqrt()
    }

    /// `‖MM* − I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let m = self.mul_raw(&self.adjoint_raw());
        let id = Self::identity().entries();
        m.iter().zip(&id).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt()
    }

    fn mul_raw(&self, o: &Self) -> [C; 4] {
        [
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        ]
    }

    /// First nonzero entry gets nonnegative real part (ties: imaginary part).
    fn canonical(self) -> Self {
        let flip = self
            .entries()
            .into_iter()
            .find(|z| *z != C::new(0.0, 0.0))
            .map(|z| z.re < 0.0 || (z.re == 0.0 && z.im < 0.0))
            .unwrap_or(false);
        if flip {
            Self { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
        } else {
            self
        }
    }

    /// `(aξ + b)/(cξ + d)`.
    pub fn apply(&self, xi: C) -> Result<C> {
        let den = self.c * xi + self.d;
        if den.norm() == 0.0 {
            return Err(Error::InfinityResult);
        }
        let w = (self.a * xi + self.b) / den;
        if !w.is_finite() {
            return Err(Error::InfinityResult);
        }
        Ok(w)
    }

    /// The induced map on the sphere.
    pub fn act(&self, x: &SpherePoint) -> SpherePoint {
        let v = x.coords();
        let [p, q, r] = self.eval(v);
        SpherePoint::normalize(Vec3::new(p, q, r))
    }
}

impl SphereMap for MobiusMatrix {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> [S; 3] {
        let [x1, x2, x3] = x;
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let up = x3 + 1.0;
        let down = -x3 + 1.0;
        // Re(k w) and Im(k w) for w = x₁ + i x₂, and the same for w̄.
        let re_w = |k: C| x1 * k.re - x2 * k.im;
        let im_w = |k: C| x1 * k.im + x2 * k.re;
        let re_wbar = |k: C| x1 * k.re + x2 * k.im;
        let im_wbar = |k: C| x1 * k.im - x2 * k.re;

        let p11 = up * a.norm_sqr() + down * b.norm_sqr() + re_w(a * b.conj()) * 2.0;
        let p22 = up * c.norm_sqr() + down * d.norm_sqr() + re_w(c * d.conj()) * 2.0;
        let ac = a * c.conj();
        let ad = a * d.conj();
        let bc = b * c.conj();
        let bd = b * d.conj();
        let p12_re = up * ac.re + re_w(ad) + re_wbar(bc) + down * bd.re;
        let p12_im = up * ac.im + im_w(ad) + im_wbar(bc) + down * bd.im;
        let inv = (p11 + p22).recip();
        [p12_re * 2.0 * inv, p12_im * 2.0 * inv, (p11 - p22) * inv]
    }
}

pub fn compose(m: &MobiusMatrix, n: &MobiusMatrix) -> MobiusMatrix {
    let [a, b, c, d] = m.mul_raw(n);
    // The product of unit-determinant matrices is invertible.
    MobiusMatrix::new(a, b, c, d).expect("product of invertible matrices")
}

/// `M = U diag(λ^{1/2}, λ^{-1/2}) V*` with `U, V ∈ SU(2)` and `λ ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularDecomp {
    pub u: MobiusMatrix,
    pub v: MobiusMatrix,
    pub lambda: f64,
}

impl SingularDecomp {
    pub fn reconstruct(&self) -> MobiusMatrix {
        compose(&compose(&self.u, &MobiusMatrix::dilation(self.lambda)), &self.v.adjoint())
    }
}

pub fn svd(m: &MobiusMatrix) -> SingularDecomp {
    let [a, b, c, d] = m.entries();
    // MM* = [[p, q], [q̄, s]] with determinant one.
    let p = a.norm_sqr() + b.norm_sqr();
    let s = c.norm_sqr() + d.norm_sqr();
    let q = a * c.conj() + b * d.conj();
    let t = p + s;
    let disc = ((p - s) * (p - s) + 4.0 * q.norm_sqr()).sqrt();
    let lambda = ((t + disc) / 2.0).max(1.0);

    // Top eigenvector (α, β); the better conditioned of the two row forms.
    let (alpha, beta) = if q.norm() == 0.0 {
        if p >= s {
            (C::new(1.0, 0.0), C::new(0.0, 0.0))
        } else {
            (C::new(0.0, 0.0), C::new(1.0, 0.0))
        }
    } else if p >= s {
        (C::new(lambda - s, 0.0), q.conj())
    } else {
        (q, C::new(lambda - p, 0.0))
    };
    let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
    let (alpha, beta) = (alpha / n, beta / n);
    let u = MobiusMatrix { a: alpha, b: -beta.conj(), c: beta, d: alpha.conj() };

    // V = M* U D⁻¹.
    let ms = m.adjoint_raw();
    let mu = ms.mul_raw(&u);
    let (ri, rs) = (1.0 / lambda.sqrt(), lambda.sqrt());
    let v = MobiusMatrix { a: mu[0] * ri, b: mu[1] * rs, c: mu[2] * ri, d: mu[3] * rs };
    SingularDecomp { u: u.canonical(), v: v.canonical(), lambda }
}

pub fn is_rotation(m: &MobiusMatrix, tol: f64) -> bool {
    svd(m).lambda <= 1.0 + tol
}

/// A proper rotation of ℝ³.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation3(pub Matrix3<f64>);

impl Rotation3 {
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
}

pub fn su2_to_so3(u: &MobiusMatrix) -> Result<Rotation3> {
    let deviation = u.unitarity_defect();
    if deviation > 1e-8 {
        return Err(Error::NotUnitary { deviation });
    }
    let mut r = Matrix3::zeros();
    for i in 0..3 {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        let img = u.eval(e);
        for j in 0..3 {
            r[(j, i)] = img[j];
        }
    }
    Ok(Rotation3(r))
}

/// `χ_λ(ξ) = (1+λ²|ξ|²)² / (λ²(1+|ξ|²)²)`.
pub fn chi(lambda: f64, xi: C) -> f64 {
    let r2 = xi.norm_sqr();
    if !r2.is_finite() {
        return lambda * lambda;
    }
    let l2 = lambda * lambda;
    if r2 > 1.0 {
        // Divide through by |ξ|⁴ to keep large arguments finite.
        let i2 = 1.0 / r2;
        let num = i2 + l2;
        let den = i2 + 1.0;
        return num * num / (l2 * den * den);
    }
    let num = 1.0 + l2 * r2;
    let den = 1.0 + r2;
    num * num / (l2 * den * den)
}

/// `χ_λ` at a sphere point, using its north-chart coordinate.
pub fn chi_at(lambda: f64, x: &SpherePoint) -> f64 {
    let z = x.vec().z;
    let l2 = lambda * lambda;
    let w = (1.0 - z) + l2 * (1.0 + z);
    w * w / (4.0 * l2)
}

/// `|∇χ_λ|` for the round metric.
pub fn chi_gradient_norm(lambda: f64, xi: C) -> f64 {
    let r = xi.norm();
    let l2 = lambda * lambda;
    let den = 1.0 + r * r;
    2.0 * r * (1.0 + l2 * r * r) * (l2 - 1.0) / (l2 * den * den)
}

/// `Δχ_λ` for the round metric.
pub fn chi_laplacian(lambda: f64, xi: C) -> f64 {
    let r2 = xi.norm_sqr();
    let l2 = lambda * lambda;
    let den = 1.0 + r2;
    2.0 * (l2 - 1.0) * (1.0 + 2.0 * l2 * r2) / (l2 * den) - 6.0 * r2 * (1.0 + l2 * r2) * (l2 - 1.0) / (l2 * den * den)
}

/// Basis of the real Lie algebra sl(2,ℂ): three Hermitian generators
/// (dilations) followed by three anti-Hermitian ones (rotations), each
/// halved so that `exp(t·G₃) = dilation(eᵗ)`.
pub fn lie_generators() -> [[C; 4]; 6] {
    let z = C::new(0.0, 0.0);
    let one = C::new(0.5, 0.0);
    let i = C::new(0.0, 0.5);
    let sx = [z, one, one, z];
    let sy = [z, -i, i, z];
    let sz = [one, z, z, -one];
    let times_i = |m: [C; 4]| m.map(|e| e * C::new(0.0, 1.0));
    [sx, sy, sz, times_i(sx), times_i(sy), times_i(sz)]
}

/// `exp(Σ pₖ Gₖ)` for the generators of [`lie_generators`].
pub fn exp_algebra(params: &[f64; 6]) -> MobiusMatrix {
    let gens = lie_generators();
    let mut x = [C::new(0.0, 0.0); 4];
    for (p, g) in params.iter().zip(&gens) {
        for k in 0..4 {
            x[k] += g[k] * *p;
        }
    }
    // X is traceless, so X² = −det(X)·I.
    let s2 = -(x[0] * x[3] - x[1] * x[2]);
    let (ch, sh_over_s) = if s2.norm() < 1e-8 {
        (C::new(1.0, 0.0) + s2 / 2.0 + s2 * s2 / 24.0, C::new(1.0, 0.0) + s2 / 6.0 + s2 * s2 / 120.0)
    } else {
        let s = s2.sqrt();
        (s.cosh(), s.sinh() / s)
    };
    let e = [ch + sh_over_s * x[0], sh_over_s * x[1], sh_over_s * x[2], ch + sh_over_s * x[3]];
    MobiusMatrix::new(e[0], e[1], e[2], e[3]).expect("exponential is invertible")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{stereo_project, stereo_unproject, Chart, StereoCoord};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cplx() -> impl Strategy<Value = C> {
        (-7.0..7.0f64, -7.0..7.0f64).prop_map(|(a, b)| C::new(a, b))
    }

    fn matrix() -> impl Strategy<Value = MobiusMatrix> {
        (cplx(), cplx(), cplx(), cplx()).prop_filter_map("invertible", |(a, b, c, d)| {
            let det = a * d - b * c;
            (det.norm() > 0.5).then(|| MobiusMatrix::new(a, b, c, d).unwrap())
        })
    }

    fn unit_point() -> impl Strategy<Value = SpherePoint> {
        (-1.0..1.0f64, 0.0..(2.0 * PI)).prop_map(|(z, phi)| {
            let s = (1.0 - z * z).sqrt();
            SpherePoint::normalize(Vec3::new(s * phi.cos(), s * phi.sin(), z))
        })
    }

    fn close(a: C, b: C, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn compose_examples() {
        let m = MobiusMatrix::new(C::new(1.0, 2.0), C::new(0.5, 0.0), C::new(-1.0, 1.0), C::new(3.0, 0.0)).unwrap();
        let id = MobiusMatrix::identity();
        assert!(compose(&id, &m).projective_distance(&m) < 1e-15);
        assert!(compose(&m, &m.inverse()).projective_distance(&id) < 1e-14);
        let d = compose(&MobiusMatrix::dilation(2.0), &MobiusMatrix::dilation(3.0));
        assert!(d.projective_distance(&MobiusMatrix::dilation(6.0)) < 1e-15);
    }

    #[test]
    fn apply_examples() {
        let xi = C::new(0.3, -1.7);
        assert_eq!(MobiusMatrix::identity().apply(xi).unwrap(), xi);
        assert!(close(MobiusMatrix::dilation(2.5).apply(xi).unwrap(), xi * 2.5, 1e-15));
        let j = MobiusMatrix::new(C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(-1.0, 0.0), C::new(0.0, 0.0)).unwrap();
        assert!(close(j.apply(C::new(2.0, 0.0)).unwrap(), C::new(-0.5, 0.0), 1e-15));
        assert_eq!(j.apply(C::new(0.0, 0.0)), Err(Error::InfinityResult));
    }

    #[test]
    fn svd_examples() {
        assert_eq!(svd(&MobiusMatrix::identity()).lambda, 1.0);
        let d = svd(&MobiusMatrix::dilation(2.0));
        assert_relative_eq!(d.lambda, 2.0, max_relative = 1e-15);
        assert!(d.u.projective_distance(&MobiusMatrix::identity()) < 1e-15);
        assert!(d.v.projective_distance(&MobiusMatrix::identity()) < 1e-15);
        let m = MobiusMatrix::new(C::new(2.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.5, 0.0)).unwrap();
        assert_relative_eq!(svd(&m).lambda, 4.0, max_relative = 1e-15);
        // Smaller singular value first: U must swap the axes.
        let m = MobiusMatrix::dilation(0.25);
        let s = svd(&m);
        assert_relative_eq!(s.lambda, 4.0, max_relative = 1e-15);
        assert!(s.reconstruct().projective_distance(&m) < 1e-14);
    }

    #[test]
    fn rotation_examples() {
        let u = MobiusMatrix::rotation_z(0.7);
        assert!(is_rotation(&u, 1e-12));
        assert!(!is_rotation(&MobiusMatrix::dilation(1.01), 1e-6));
        assert!(is_rotation(&MobiusMatrix::dilation(1.0), 1e-6));
    }

    #[test]
    fn su2_examples() {
        let r = su2_to_so3(&MobiusMatrix::identity()).unwrap();
        assert!((r.0 - Matrix3::identity()).norm() < 1e-15);
        let r = su2_to_so3(&MobiusMatrix::rotation_z(PI / 2.0)).unwrap();
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((r.0 - expected).norm() < 1e-15);
        let alpha = 1.234;
        let r = su2_to_so3(&MobiusMatrix::rotation_z(alpha)).unwrap();
        assert_relative_eq!(r.0[(0, 0)], alpha.cos(), epsilon = 1e-15);
        assert_relative_eq!(r.0[(1, 0)], alpha.sin(), epsilon = 1e-15);
        assert!(matches!(su2_to_so3(&MobiusMatrix::dilation(2.0)), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn sign_independence_of_the_action() {
        let u = MobiusMatrix::rotation_z(0.4);
        let neg = MobiusMatrix { a: -u.a, b: -u.b, c: -u.c, d: -u.d };
        let r1 = su2_to_so3(&u).unwrap();
        let r2 = su2_to_so3(&neg).unwrap();
        assert!((r1.0 - r2.0).norm() < 1e-15);
        assert_eq!(neg.canonical(), u);
    }

    #[test]
    fn chi_examples() {
        for xi in [C::new(0.0, 0.0), C::new(0.3, 2.0), C::new(-5.0, 1.0)] {
            assert_relative_eq!(chi(1.0, xi), 1.0, epsilon = 1e-15);
        }
        assert_relative_eq!(chi(2.0, C::new(0.0, 0.0)), 0.25, epsilon = 1e-15);
        assert_relative_eq!(chi(2.0, C::new(1e12, 0.0)), 4.0, max_relative = 1e-12);
        assert_relative_eq!(chi_gradient_norm(2.0, C::new(1.0, 0.0)), 15.0 / 8.0, epsilon = 1e-15);
        assert_eq!(chi_gradient_norm(1.0, C::new(0.4, 0.1)), 0.0);
        assert_eq!(chi_gradient_norm(3.0, C::new(0.0, 0.0)), 0.0);
        assert_relative_eq!(chi_laplacian(2.0, C::new(0.0, 0.0)), 1.5, epsilon = 1e-15);
        assert_relative_eq!(chi_laplacian(2.0, C::new(1.0, 0.0)), 9.0 / 8.0, epsilon = 1e-15);
        assert_eq!(chi_laplacian(1.0, C::new(0.4, 0.1)), 0.0);
    }

    /// Independent route: χ_λ is a quadratic in the height `z`, so
    /// `∇χ = χ'(z)∇z` and `Δχ = χ''(z)|∇z|² + χ'(z)Δz` with `|∇z|² = 1 − z²`
    /// and `Δz = −2z`.
    #[test]
    fn chi_derivatives_match_height_calculus() {
        for &lambda in &[1.3, 2.0, 4.5] {
            for &(re, im) in &[(0.2, 0.1), (1.0, 0.0), (-2.0, 3.0), (0.0, 0.7)] {
                let xi = C::new(re, im);
                let z = stereo_unproject(&StereoCoord::new(xi, Chart::North)).vec().z;
                let l2 = lambda * lambda;
                let (a, b) = (1.0 + l2, l2 - 1.0);
                let d1 = 2.0 * b * (a + b * z) / (4.0 * l2);
                let d2 = 2.0 * b * b / (4.0 * l2);
                let grad = d1.abs() * (1.0 - z * z).sqrt();
                let lap = d2 * (1.0 - z * z) - 2.0 * z * d1;
                assert_relative_eq!(chi_gradient_norm(lambda, xi), grad, max_relative = 1e-12);
                assert_relative_eq!(chi_laplacian(lambda, xi), lap, epsilon = 1e-12, max_relative = 1e-12);
            }
        }
    }

    /// Fourth-order chart differences of χ against the closed forms.
    #[test]
    fn chi_derivatives_match_chart_differences() {
        let grid = crate::sphere::build_grid(6, 8).unwrap();
        for &lambda in &[1.5, 2.0, 3.0] {
            for node in grid.nodes() {
                let c = stereo_project(&node.point, node.point.active_chart()).unwrap();
                let field = |p: &SpherePoint| Ok(Vec3::new(chi_at(lambda, p), 0.0, 0.0));
                let (_, ds, dt, lap) = crate::sphere::chart_finite_differences(field, &c).unwrap();
                let cf = crate::sphere::conformal_factor(&c);
                let grad = ((ds.x * ds.x + dt.x * dt.x) / cf).sqrt();
                let north = stereo_project(&node.point, Chart::North).unwrap();
                let g = chi_gradient_norm(lambda, north.xi);
                let l = chi_laplacian(lambda, north.xi);
                assert!((grad - g).abs() <= 1e-7 * g.abs().max(1.0), "{grad} vs {g}");
                assert!((lap.x / cf - l).abs() <= 1e-7 * l.abs().max(1.0), "{} vs {l}", lap.x / cf);
            }
        }
    }

    #[test]
    fn exp_of_dilation_generator() {
        let m = exp_algebra(&[0.0, 0.0, 2.0f64.ln(), 0.0, 0.0, 0.0]);
        assert!(m.projective_distance(&MobiusMatrix::dilation(2.0)) < 1e-15);
        let r = exp_algebra(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.9]);
        assert!(r.projective_distance(&MobiusMatrix::rotation_z(0.9)) < 1e-15);
        let tiny = exp_algebra(&[1e-9, 0.0, 0.0, 0.0, 2e-9, 0.0]);
        assert!(tiny.projective_distance(&MobiusMatrix::identity()) < 1e-8);
    }

    proptest! {
        #[test]
        fn group_laws(m in matrix(), n in matrix(), k in matrix(), xi in cplx()) {
            let lhs = compose(&compose(&m, &n), &k);
            let rhs = compose(&m, &compose(&n, &k));
            prop_assert!(lhs.projective_distance(&rhs) <= 1e-10 * (1.0 + rhs.entries().iter().map(|e| e.norm()).sum::<f64>()).powi(2));
            if let (Ok(inner), Ok(whole)) = (n.apply(xi), compose(&m, &n).apply(xi)) {
                if let Ok(outer) = m.apply(inner) {
                    prop_assume!(outer.norm() < 1e6 && inner.norm() < 1e6);
                    prop_assert!(close(whole, outer, 1e-8));
                }
            }
        }

        #[test]
        fn svd_reconstructs(m in matrix()) {
            let s = svd(&m);
            prop_assert!(s.lambda >= 1.0);
            prop_assert!(s.u.unitarity_defect() < 1e-10);
            let scale = m.entries().iter().map(|e| e.norm()).fold(1.0, f64::max);
            prop_assert!(s.v.unitarity_defect() < 1e-10 * scale * scale);
            prop_assert!(s.reconstruct().projective_distance(&m) < 1e-9 * scale);
            let inv = svd(&m.inverse()).lambda;
            prop_assert!((inv - s.lambda).abs() <= 1e-9 * s.lambda);
        }

        #[test]
        fn dilation_denominator_identity(lambda in 1.0..20.0f64, xi in cplx()) {
            let m = MobiusMatrix::dilation(lambda);
            let [_, _, c, d] = m.entries();
            let w = m.apply(xi).unwrap();
            let lhs = (c * xi + d).norm_sqr() * (1.0 + w.norm_sqr());
            let rhs = (lambda * lambda * xi.norm_sqr() + 1.0) / lambda;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }

        #[test]
        fn chi_two_sided_bound(lambda in 1.0..50.0f64, xi in cplx()) {
            let v = chi(lambda, xi);
            let l2 = lambda * lambda;
            prop_assert!(v >= (1.0 / l2) * (1.0 - 1e-14) && v <= l2 * (1.0 + 1e-14));
        }

        #[test]
        fn sphere_action_matches_chart_action(m in matrix(), x in unit_point()) {
            let image = m.act(&x);
            prop_assert!((image.vec().norm() - 1.0).abs() < 1e-14);
            if let Ok(c) = stereo_project(&x, Chart::North) {
                if let Ok(w) = m.apply(c.xi) {
                    prop_assume!(c.xi.norm() < 1e3 && w.norm() < 1e3);
                    let expected = stereo_unproject(&StereoCoord::new(w, Chart::North));
                    prop_assert!((expected.vec() - image.vec()).norm() < 1e-8);
                }
            }
        }

        #[test]
        fn su2_images_are_rotations(a in cplx(), b in cplx()) {
            let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
            prop_assume!(n > 1e-3);
            let (a, b) = (a / n, b / n);
            let u = MobiusMatrix::new(a, -b.conj(), b, a.conj()).unwrap();
            prop_assert!(is_rotation(&u, 1e-10));
            let r = su2_to_so3(&u).unwrap().0;
            prop_assert!((r * r.transpose() - Matrix3::identity()).norm() < 1e-10);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-10);
        }
    }
}
