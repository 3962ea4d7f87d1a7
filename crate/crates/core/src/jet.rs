//! Second-order forward-mode jets in two variables.
//!
//! A [`Jet2`] carries a value together with its first and second partial
//! derivatives with respect to two chart coordinates `(s, t)`. Maps written
//! generically over [`Scalar`] can therefore be evaluated either on plain
//! `f64` or on jets, which yields chart derivatives exact up to rounding.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed to evaluate maps generically.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan(self) -> Self;
    fn exp(self) -> Self;
    fn atan2(self, x: Self) -> Self;

    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }

    fn powi(self, n: u32) -> Self {
        let mut acc = Self::cst(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn atan(self) -> Self {
        f64::atan(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn powi(self, n: u32) -> Self {
        f64::powi(self, n as i32)
    }
}

/// Value, gradient `[∂s, ∂t]` and Hessian `[∂ss, ∂st, ∂tt]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub d: [f64; 2],
    pub h: [f64; 3],
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; 2], h: [0.0; 3] }
    }

    /// Independent variable number `idx` (0 for `s`, 1 for `t`).
    pub fn var(v: f64, idx: usize) -> Self {
        let mut d = [0.0; 2];
        d[idx] = 1.0;
        Self { v, d, h: [0.0; 3] }
    }

    /// Flat Laplacian `∂ss + ∂tt`.
    pub fn laplacian(&self) -> f64 {
        self.h[0] + self.h[2]
    }

    /// Applies a scalar function given its value and first two derivatives.
    fn chain(self, g0: f64, g1: f64, g2: f64) -> Self {
        let [ds, dt] = self.d;
        Self {
            v: g0,
            d: [g1 * ds, g1 * dt],
            h: [g1 * self.h[0] + g2 * ds * ds, g1 * self.h[1] + g2 * ds * dt, g1 * self.h[2] + g2 * dt * dt],
        }
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1]],
            h: [self.h[0] + o.h[0], self.h[1] + o.h[1], self.h[2] + o.h[2]],
        }
    }
}

impl Sub for Jet2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1]],
            h: [self.h[0] - o.h[0], self.h[1] - o.h[1], self.h[2] - o.h[2]],
        }
    }
}

impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self, o);
        Self {
            v: a.v * b.v,
            d: [a.d[0] * b.v + a.v * b.d[0], a.d[1] * b.v + a.v * b.d[1]],
            h: [
                a.h[0] * b.v + 2.0 * a.d[0] * b.d[0] + a.v * b.h[0],
                a.h[1] * b.v + a.d[0] * b.d[1] + a.d[1] * b.d[0] + a.v * b.h[1],
                a.h[2] * b.v + 2.0 * a.d[1] * b.d[1] + a.v * b.h[2],
            ],
        }
    }
}

impl Div for Jet2 {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self { v: -self.v, d: [-self.d[0], -self.d[1]], h: [-self.h[0], -self.h[1], -self.h[2]] }
    }
}

impl Add<f64> for Jet2 {
    type Output = Self;
    fn add(mut self, o: f64) -> Self {
        self.v += o;
        self
    }
}

impl Sub<f64> for Jet2 {
    type Output = Self;
    fn sub(mut self, o: f64) -> Self {
        self.v -= o;
        self
    }
}

impl Mul<f64> for Jet2 {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        Self { v: self.v * o, d: [self.d[0] * o, self.d[1] * o], h: [self.h[0] * o, self.h[1] * o, self.h[2] * o] }
    }
}

impl Div<f64> for Jet2 {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        self * (1.0 / o)
    }
}

impl Scalar for Jet2 {
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    fn value(self) -> f64 {
        self.v
    }
    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn atan(self) -> Self {
        let q = 1.0 / (1.0 + self.v * self.v);
        self.chain(self.v.atan(), q, -2.0 * self.v * q * q)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn atan2(self, x: Self) -> Self {
        // Rotate so the base point sits on the positive real axis; the
        // remaining angle is then an `atan` of a jet with zero value.
        let y = self;
        let (x0, y0) = (x.v, y.v);
        let along = x * x0 + y * y0;
        let across = y * x0 - x * y0;
        (across / along).atan() + y0.atan2(x0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd2<F: Fn(f64, f64) -> f64>(f: F, s: f64, t: f64) -> ([f64; 2], [f64; 3]) {
        let h = 1e-4;
        let ds = (f(s + h, t) - f(s - h, t)) / (2.0 * h);
        let dt = (f(s, t + h) - f(s, t - h)) / (2.0 * h);
        let dss = (f(s + h, t) - 2.0 * f(s, t) + f(s - h, t)) / (h * h);
        let dtt = (f(s, t + h) - 2.0 * f(s, t) + f(s, t - h)) / (h * h);
        let dst = (f(s + h, t + h) - f(s + h, t - h) - f(s - h, t + h) + f(s - h, t - h)) / (4.0 * h * h);
        ([ds, dt], [dss, dst, dtt])
    }

    fn generic<S: Scalar>(s: S, t: S) -> S {
        let r = (s * s + t * t + 1.0).sqrt();
        (s * t).sin() / r + t.atan2(s + 2.0) * (t * 0.3).exp() - (s * 0.5).cos().atan()
    }

    #[test]
    fn jet_matches_finite_differences() {
        for &(s, t) in &[(0.3, -0.7), (-1.2, 0.4), (0.05, 0.9)] {
            let j = generic(Jet2::var(s, 0), Jet2::var(t, 1));
            assert!((j.v - generic(s, t)).abs() < 1e-15);
            let (d, h) = fd2(generic::<f64>, s, t);
            for (a, b) in j.d.iter().zip(&d) {
                assert!((a - b).abs() < 1e-7, "gradient: {a} vs {b}");
            }
            for (a, b) in j.h.iter().zip(&h) {
                assert!((a - b).abs() < 1e-5, "hessian: {a} vs {b}");
            }
        }
    }

    #[test]
    fn atan2_covers_all_quadrants() {
        for &(y, x) in &[(1.0, -1.0), (-0.5, -2.0), (0.0, -1.0), (2.0, 0.0)] {
            let j = Jet2::var(y, 0).atan2(Jet2::var(x, 1));
            assert!((j.v - f64::atan2(y, x)).abs() < 1e-15);
            let r2 = x * x + y * y;
            assert!((j.d[0] - x / r2).abs() < 1e-14);
            assert!((j.d[1] + y / r2).abs() < 1e-14);
        }
    }
}
