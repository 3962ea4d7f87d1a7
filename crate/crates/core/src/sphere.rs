//! Stereographic charts, quadrature and chart-aware derivatives on S².
//!
//! Every derivative is taken in whichever stereographic chart puts the
//! evaluation point inside the unit disk, so the conformal factor stays in
//! `[1, 4]`. Because the round metric is conformal in these charts, the
//! sphere gradient and Laplacian follow from the flat chart derivatives by
//! dividing through by `4/(1+|ξ|²)²`.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jet::{Jet2, Scalar};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// A point of the unit sphere in ℝ³.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint(Vec3);

impl SpherePoint {
    /// Accepts `x` if `|x|² = 1` within `1e-12`.
    pub fn new(x: Vec3) -> Result<Self> {
        let n2 = x.norm_squared();
        if (n2 - 1.0).abs() > 1e-12 || !n2.is_finite() {
            return Err(Error::NotOnSphere { norm: n2.sqrt() });
        }
        Ok(Self(x))
    }

    /// Radially projects a nonzero vector onto the sphere.
    pub fn normalize(x: Vec3) -> Self {
        Self(x / x.norm())
    }

    pub fn from_polar(theta_polar: f64, azimuth: f64) -> Self {
        let (s, c) = theta_polar.sin_cos();
        Self(Vec3::new(s * azimuth.cos(), s * azimuth.sin(), c))
    }

    pub fn vec(&self) -> &Vec3 {
        &self.0
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }

    /// The chart in which this point has `|ξ| ≤ 1`.
    pub fn active_chart(&self) -> Chart {
        if self.0.z <= 0.0 {
            Chart::North
        } else {
            Chart::South
        }
    }
}

/// Stereographic chart. `North` projects from `(0,0,1)` so that `ξ = 0` is
/// the south pole; `South` is the antipodal chart with `ξ_S = 1/ξ_N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    North,
    South,
}

impl Chart {
    pub fn pole(self) -> Vec3 {
        match self {
            Chart::North => Vec3::new(0.0, 0.0, 1.0),
            Chart::South => Vec3::new(0.0, 0.0, -1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StereoCoord {
    pub xi: Complex64,
    pub chart: Chart,
}

impl StereoCoord {
    pub fn new(xi: Complex64, chart: Chart) -> Self {
        Self { xi, chart }
    }
}

pub fn stereo_project(x: &SpherePoint, chart: Chart) -> Result<StereoCoord> {
    let v = x.vec();
    let xi = match chart {
        Chart::North => {
            let den = 1.0 - v.z;
            if den <= 1e-15 {
                return Err(Error::Pole(chart));
            }
            Complex64::new(v.x, v.y) / den
        }
        Chart::South => {
            let den = 1.0 + v.z;
            if den <= 1e-15 {
                return Err(Error::Pole(chart));
            }
            Complex64::new(v.x, -v.y) / den
        }
    };
    Ok(StereoCoord { xi, chart })
}

pub fn stereo_unproject(c: &StereoCoord) -> SpherePoint {
    let [x, y, z] = unproject_generic(c.xi.re, c.xi.im, c.chart);
    SpherePoint(Vec3::new(x, y, z))
}

/// Inverse stereographic projection evaluated on any [`Scalar`].
pub fn unproject_generic<S: Scalar>(s: S, t: S, chart: Chart) -> [S; 3] {
    let r2 = s * s + t * t;
    let inv = (r2 + 1.0).recip();
    match chart {
        Chart::North => [s * 2.0 * inv, t * 2.0 * inv, (r2 - 1.0) * inv],
        Chart::South => [s * 2.0 * inv, -(t * 2.0) * inv, (-r2 + 1.0) * inv],
    }
}

/// Metric factor `4/(1+|ξ|²)²` of the round metric in a stereographic chart.
pub fn conformal_factor(c: &StereoCoord) -> f64 {
    let d = 1.0 + c.xi.norm_sqr();
    4.0 / (d * d)
}

/// Gauss–Legendre nodes and weights on `(-1, 1)`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Clone, Copy, Debug)]
pub struct QuadratureNode {
    pub point: SpherePoint,
    pub weight: f64,
}

/// Tensor rule: Gauss–Legendre in `cos r` times the trapezoidal rule in the
/// azimuth. No node sits on a pole.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    nodes: Vec<QuadratureNode>,
    n_polar: usize,
    n_azimuthal: usize,
}

impl QuadratureGrid {
    pub fn nodes(&self) -> &[QuadratureNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_polar(&self) -> usize {
        self.n_polar
    }

    pub fn n_azimuthal(&self) -> usize {
        self.n_azimuthal
    }

    /// Evaluates `f` at every node in parallel, preserving node order.
    pub fn map_nodes<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&QuadratureNode) -> T + Sync + Send,
    {
        self.nodes.par_iter().map(f).collect()
    }

    /// Weighted sum of per-node values, in node order.
    pub fn weighted_sum(&self, values: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (i, (node, v)) in self.nodes.iter().zip(values).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { node: i });
            }
            acc += node.weight * v;
        }
        Ok(acc)
    }
}

pub fn build_grid(n_polar: usize, n_azimuthal: usize) -> Result<QuadratureGrid> {
    if n_polar < 2 || n_azimuthal < 4 {
        return Err(Error::InvalidResolution { n_polar, n_azimuthal });
    }
    let (t, w) = gauss_legendre(n_polar);
    let dphi = 2.0 * std::f64::consts::PI / n_azimuthal as f64;
    let mut nodes = Vec::with_capacity(n_polar * n_azimuthal);
    for (ti, wi) in t.iter().zip(&w) {
        let s = (1.0 - ti * ti).sqrt();
        for j in 0..n_azimuthal {
            let phi = dphi * j as f64;
            let p = Vec3::new(s * phi.cos(), s * phi.sin(), *ti);
            nodes.push(QuadratureNode { point: SpherePoint(p / p.norm()), weight: wi * dphi });
        }
    }
    Ok(QuadratureGrid { nodes, n_polar, n_azimuthal })
}

/// `Σ wᵢ g(xᵢ)`; fails on the first non-finite node value.
pub fn integrate<F>(g: F, grid: &QuadratureGrid) -> Result<f64>
where
    F: Fn(&SpherePoint) -> f64 + Sync + Send,
{
    let values = grid.map_nodes(|n| g(&n.point));
    grid.weighted_sum(&values)
}

/// A map written generically so it can be evaluated on plain reals and on
/// jets. Implementors get analytic chart derivatives for free.
pub trait SphereMap: Send + Sync + 'static {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> [S; 3];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

type ValueFn = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;
type JetFn = Arc<dyn Fn(&[Jet2; 3]) -> [Jet2; 3] + Send + Sync>;

/// A map S² → S², evaluable pointwise with optional analytic chart jets.
#[derive(Clone)]
pub struct MapField {
    value: ValueFn,
    jet: Option<JetFn>,
    mode: DerivativeMode,
}

impl std::fmt::Debug for MapField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MapField").field("analytic", &self.jet.is_some()).field("mode", &self.mode).finish()
    }
}

/// Above this deviation values are renormalized; above `NORM_REJECT` rejected.
const NORM_RENORMALIZE: f64 = 1e-10;
const NORM_REJECT: f64 = 1e-6;

impl MapField {
    pub fn from_map<M: SphereMap>(map: M) -> Self {
        let map = Arc::new(map);
        let m2 = Arc::clone(&map);
        Self {
            value: Arc::new(move |x: &Vec3| {
                let [a, b, c] = map.eval([x.x, x.y, x.z]);
                Vec3::new(a, b, c)
            }),
            jet: Some(Arc::new(move |x: &[Jet2; 3]| m2.eval(*x))),
            mode: DerivativeMode::Analytic,
        }
    }

    /// A map known only through its values; derivatives use finite differences.
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&Vec3) -> Vec3 + Send + Sync + 'static,
    {
        Self { value: Arc::new(f), jet: None, mode: DerivativeMode::FiniteDifference }
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn has_analytic(&self) -> bool {
        self.jet.is_some()
    }

    /// Evaluates the map, enforcing the unit-norm policy.
    pub fn eval(&self, x: &SpherePoint) -> Result<SpherePoint> {
        let v = (self.value)(x.vec());
        let n = v.norm();
        if !n.is_finite() || (n - 1.0).abs() > NORM_REJECT {
            return Err(Error::NotOnSphere { norm: n });
        }
        if (n - 1.0).abs() > NORM_RENORMALIZE {
            return Ok(SpherePoint(v / n));
        }
        Ok(SpherePoint(v))
    }

    fn eval_jet(&self, x: &[Jet2; 3]) -> Result<[Jet2; 3]> {
        let jet = self.jet.as_ref().ok_or(Error::DerivativeUnavailable)?;
        let u = jet(x);
        let n = (u[0].v * u[0].v + u[1].v * u[1].v + u[2].v * u[2].v).sqrt();
        if !n.is_finite() || (n - 1.0).abs() > NORM_REJECT {
            return Err(Error::NotOnSphere { norm: n });
        }
        if (n - 1.0).abs() > NORM_RENORMALIZE {
            let inv = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt().recip();
            return Ok([u[0] * inv, u[1] * inv, u[2] * inv]);
        }
        Ok(u)
    }

    /// `x ↦ u(φ(x))` for a generic sphere map `φ`.
    pub fn precompose<M: SphereMap>(&self, inner: M) -> MapField {
        let inner = Arc::new(inner);
        let i2 = Arc::clone(&inner);
        let value = Arc::clone(&self.value);
        let jet = self.jet.clone();
        MapField {
            value: Arc::new(move |x: &Vec3| {
                let [a, b, c] = inner.eval([x.x, x.y, x.z]);
                value(&Vec3::new(a, b, c))
            }),
            jet: jet.map(|j| -> JetFn { Arc::new(move |x: &[Jet2; 3]| j(&i2.eval(*x))) }),
            mode: self.mode,
        }
    }
}

/// Value and chart derivatives of a map at one point.
#[derive(Clone, Copy, Debug)]
pub struct LocalDerivatives {
    pub coord: StereoCoord,
    pub value: Vec3,
    /// `∂u/∂s`, `∂u/∂t` in the chart.
    pub ds: Vec3,
    pub dt: Vec3,
    /// Chart derivatives of the embedding `ξ ↦ x`.
    pub xs: Vec3,
    pub xt: Vec3,
    /// `∂ss u + ∂tt u`.
    pub flat_laplacian: Vec3,
    /// `4/(1+|ξ|²)²`.
    pub conformal: f64,
}

impl LocalDerivatives {
    /// `|∇u|²` for the round metric.
    pub fn gradient_sq(&self) -> f64 {
        (self.ds.norm_squared() + self.dt.norm_squared()) / self.conformal
    }

    /// The gradient as the 3×3 matrix `Σ e_a(u) ⊗ e_a`; chart independent.
    pub fn gradient(&self) -> Mat3 {
        (self.ds * self.xs.transpose() + self.dt * self.xt.transpose()) / self.conformal
    }

    pub fn laplacian(&self) -> Vec3 {
        self.flat_laplacian / self.conformal
    }

    /// `u · e₁(u) ∧ e₂(u)` for an oriented orthonormal frame. Both charts
    /// reverse orientation with respect to the outward normal.
    pub fn jacobian(&self) -> f64 {
        -self.value.dot(&self.ds.cross(&self.dt)) / self.conformal
    }

    /// Tangent frame `(e₁, e₂)` with `e₁ × e₂ = x`.
    pub fn oriented_frame(&self) -> (Vec3, Vec3) {
        let s = self.conformal.sqrt();
        (self.xt / s, self.xs / s)
    }
}

fn embedding_jet(c: &StereoCoord) -> [Jet2; 3] {
    unproject_generic(Jet2::var(c.xi.re, 0), Jet2::var(c.xi.im, 1), c.chart)
}

fn jet_to_parts(j: &[Jet2; 3]) -> (Vec3, Vec3, Vec3, Vec3) {
    (
        Vec3::new(j[0].v, j[1].v, j[2].v),
        Vec3::new(j[0].d[0], j[1].d[0], j[2].d[0]),
        Vec3::new(j[0].d[1], j[1].d[1], j[2].d[1]),
        Vec3::new(j[0].laplacian(), j[1].laplacian(), j[2].laplacian()),
    )
}

/// `∂x/∂s`, `∂x/∂t` of the inverse projection at `c`.
pub fn embedding_derivatives(c: &StereoCoord) -> (Vec3, Vec3) {
    let (_, xs, xt, _) = jet_to_parts(&embedding_jet(c));
    (xs, xt)
}

/// Step for the fourth-order stencils.
pub fn fd_step(xi: Complex64) -> f64 {
    f64::EPSILON.powf(0.2) * xi.norm().max(1.0)
}

/// Fourth-order central differences of an ℝ³-valued function in a chart.
/// Returns `(value, ∂s, ∂t, ∂ss + ∂tt)`.
pub fn chart_finite_differences<F>(g: F, c: &StereoCoord) -> Result<(Vec3, Vec3, Vec3, Vec3)>
where
    F: Fn(&SpherePoint) -> Result<Vec3>,
{
    let h = fd_step(c.xi);
    let at = |ds: f64, dt: f64| -> Result<Vec3> {
        let p = stereo_unproject(&StereoCoord::new(c.xi + Complex64::new(ds, dt), c.chart));
        g(&p)
    };
    let f0 = at(0.0, 0.0)?;
    let (sp1, sm1, sp2, sm2) = (at(h, 0.0)?, at(-h, 0.0)?, at(2.0 * h, 0.0)?, at(-2.0 * h, 0.0)?);
    let (tp1, tm1, tp2, tm2) = (at(0.0, h)?, at(0.0, -h)?, at(0.0, 2.0 * h)?, at(0.0, -2.0 * h)?);
    let d1 = |p1: Vec3, m1: Vec3, p2: Vec3, m2: Vec3| (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h);
    let d2 = |p1: Vec3, m1: Vec3, p2: Vec3, m2: Vec3| ((p1 + m1) * 16.0 - (p2 + m2) - f0 * 30.0) / (12.0 * h * h);
    let ds = d1(sp1, sm1, sp2, sm2);
    let dt = d1(tp1, tm1, tp2, tm2);
    let lap = d2(sp1, sm1, sp2, sm2) + d2(tp1, tm1, tp2, tm2);
    Ok((f0, ds, dt, lap))
}

/// Chart derivatives of `u` at `x` in the chart with `|ξ| ≤ 1`.
pub fn local_derivatives(u: &MapField, x: &SpherePoint) -> Result<LocalDerivatives> {
    local_derivatives_in(u, x, x.active_chart())
}

/// As [`local_derivatives`] but in a caller-chosen chart.
pub fn local_derivatives_in(u: &MapField, x: &SpherePoint, chart: Chart) -> Result<LocalDerivatives> {
    let coord = stereo_project(x, chart)?;
    let emb = embedding_jet(&coord);
    let (_, xs, xt, _) = jet_to_parts(&emb);
    let conformal = conformal_factor(&coord);
    let (value, ds, dt, flat_laplacian) = match u.mode {
        DerivativeMode::Analytic => jet_to_parts(&u.eval_jet(&emb)?),
        DerivativeMode::FiniteDifference => chart_finite_differences(|p| u.eval(p).map(|q| *q.vec()), &coord)?,
    };
    Ok(LocalDerivatives { coord, value, ds, dt, xs, xt, flat_laplacian, conformal })
}

pub fn sphere_gradient(u: &MapField, x: &SpherePoint) -> Result<Mat3> {
    Ok(local_derivatives(u, x)?.gradient())
}

pub fn sphere_laplacian(u: &MapField, x: &SpherePoint) -> Result<Vec3> {
    Ok(local_derivatives(u, x)?.laplacian())
}
