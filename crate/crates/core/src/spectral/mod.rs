//! Tangent vector fields on S²: eigenfields of the tangential Laplacian,
//! the Helmholtz–Hodge splitting and the Jacobi operator `J_ε`.
//!
//! Fields built from harmonic polynomials keep a polynomial form, so every
//! operator on them is exact up to rounding. Any other field is sampled and
//! differentiated with the chart stencils of [`crate::sphere`].

mod poly;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sphere::{
    build_grid, chart_finite_differences, embedding_derivatives, stereo_project, QuadratureGrid, SpherePoint, Vec3,
};

pub use poly::{Exponent, Poly};

/// Hodge solves use spherical harmonics up to this degree unless told otherwise.
pub const DEFAULT_K_MAX: u32 = 12;

/// A homogeneous harmonic polynomial of degree `k`; on S² an eigenfunction
/// of the Laplacian with eigenvalue `−k(k+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicPoly {
    k: u32,
    poly: Poly,
}

impl HarmonicPoly {
    /// Checks homogeneity and `Δp = 0` on the coefficients.
    pub fn new(k: u32, poly: Poly) -> Result<Self> {
        if !poly.is_homogeneous(k) {
            return Err(Error::DomainError(format!("polynomial is not homogeneous of degree {k}")));
        }
        let residual = poly.laplacian().max_abs_coefficient();
        if residual > 1e-10 * poly.max_abs_coefficient().max(1.0) {
            return Err(Error::NotHarmonic { residual });
        }
        Ok(Self { k, poly })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn eigenvalue(&self) -> f64 {
        -((self.k * (self.k + 1)) as f64)
    }

    pub fn eval(&self, x: &SpherePoint) -> f64 {
        self.poly.eval(x.vec())
    }
}

/// Harmonic polynomials `Σ_j x₃ʲ p_j(x₁, x₂)` are fixed by `p₀` and `p₁`
/// through `p_{j+2} = −Δp_j / ((j+2)(j+1))`.
fn raw_harmonic(k: u32, seed: Poly, start: u32) -> Poly {
    let mut out = Poly::zero();
    let mut p = seed;
    let mut j = start;
    while !p.is_zero() && j <= k {
        out = &out + &(&Poly::monomial([0, 0, j], 1.0) * &p);
        p = p.laplacian().scale(-1.0 / ((j + 2) * (j + 1)) as f64);
        j += 2;
    }
    out
}

fn build_basis(k: u32) -> Vec<HarmonicPoly> {
    let mut raw = Vec::with_capacity(2 * k as usize + 1);
    for a in (0..=k).rev() {
        raw.push(raw_harmonic(k, Poly::monomial([a, k - a, 0], 1.0), 0));
    }
    for a in (0..k).rev() {
        raw.push(raw_harmonic(k, Poly::monomial([a, k - 1 - a, 0], 1.0), 1));
    }

    // Products have degree 2k, which this grid integrates exactly.
    let grid = build_grid(k as usize + 2, 2 * k as usize + 4).expect("valid resolution");
    let sample = |p: &Poly| -> Vec<f64> { grid.nodes().iter().map(|n| p.eval(n.point.vec())).collect() };
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        grid.nodes().iter().zip(a.iter().zip(b)).map(|(n, (x, y))| n.weight * x * y).sum()
    };

    let mut basis: Vec<(Poly, Vec<f64>)> = Vec::with_capacity(raw.len());
    for p in raw {
        let mut p = p;
        let mut v = sample(&p);
        for _ in 0..2 {
            for (q, w) in &basis {
                let c = dot(&v, w);
                p = &p - &q.scale(c);
                v.iter_mut().zip(w).for_each(|(a, b)| *a -= c * b);
            }
        }
        let norm = dot(&v, &v).sqrt();
        p = p.scale(1.0 / norm);
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push((p, v));
    }
    basis
        .into_iter()
        .map(|(p, _)| HarmonicPoly::new(k, p.chop(1e-14)).expect("recurrence yields harmonic polynomials"))
        .collect()
}

/// `L²(S²)`-orthonormal basis of the `2k+1` harmonic polynomials of degree
/// `k`. For `k = 1` the order is `x₁, x₂, x₃`. Results are cached.
pub fn harmonic_basis(k: u32) -> Arc<Vec<HarmonicPoly>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<HarmonicPoly>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(b) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&k) {
        return b.clone();
    }
    let b = Arc::new(build_basis(k));
    cache.lock().unwrap_or_else(|e| e.into_inner()).entry(k).or_insert(b).clone()
}

type SampledVec = Arc<dyn Fn(&SpherePoint) -> Result<Vec3> + Send + Sync>;
type SampledScalar = Arc<dyn Fn(&SpherePoint) -> Result<f64> + Send + Sync>;

/// A real function on S².
#[derive(Clone)]
pub enum ScalarField {
    Poly(Poly),
    Sampled(SampledScalar),
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Poly(p) => f.debug_tuple("Poly").field(p).finish(),
            Self::Sampled(_) => f.write_str("Sampled"),
        }
    }
}

impl ScalarField {
    pub fn eval(&self, x: &SpherePoint) -> Result<f64> {
        match self {
            Self::Poly(p) => Ok(p.eval(x.vec())),
            Self::Sampled(f) => f(x),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Gradient,
    StarGradient,
    General,
}

#[derive(Clone)]
enum Repr {
    Poly(Box<[Poly; 3]>),
    Sampled(SampledVec),
}

/// A tangent vector field on S².
#[derive(Clone)]
pub struct TangentField {
    repr: Repr,
    kind: FieldKind,
    source_k: Option<u32>,
}

impl std::fmt::Debug for TangentField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TangentField")
            .field("polynomial", &self.is_polynomial())
            .field("kind", &self.kind)
            .field("source_k", &self.source_k)
            .finish()
    }
}

fn project_components(v: &[Poly; 3]) -> [Poly; 3] {
    let x = [Poly::coord(0), Poly::coord(1), Poly::coord(2)];
    let normal = &(&(&x[0] * &v[0]) + &(&x[1] * &v[1])) + &(&x[2] * &v[2]);
    std::array::from_fn(|i| &v[i] - &(&normal * &x[i]))
}

fn eval_components(c: &[Poly; 3], x: &Vec3) -> Vec3 {
    Vec3::new(c[0].eval(x), c[1].eval(x), c[2].eval(x))
}

impl TangentField {
    /// A polynomial field. Tangency is checked at evaluation.
    pub fn from_components(c: [Poly; 3]) -> Self {
        Self { repr: Repr::Poly(Box::new(c)), kind: FieldKind::General, source_k: None }
    }

    /// A sampled field; derivatives use chart finite differences.
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&SpherePoint) -> Vec3 + Send + Sync + 'static,
    {
        Self { repr: Repr::Sampled(Arc::new(move |x| Ok(f(x)))), kind: FieldKind::General, source_k: None }
    }

    pub fn zero() -> Self {
        Self::from_components([Poly::zero(), Poly::zero(), Poly::zero()])
    }

    fn with_meta(mut self, kind: FieldKind, source_k: Option<u32>) -> Self {
        self.kind = kind;
        self.source_k = source_k;
        self
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn source_k(&self) -> Option<u32> {
        self.source_k
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self.repr, Repr::Poly(_))
    }

    pub fn components(&self) -> Option<&[Poly; 3]> {
        match &self.repr {
            Repr::Poly(c) => Some(c),
            Repr::Sampled(_) => None,
        }
    }

    /// The same field with its polynomial form dropped, so that operators
    /// fall back to finite differences.
    pub fn sampled(&self) -> Self {
        let this = self.clone();
        Self { repr: Repr::Sampled(Arc::new(move |x| this.raw(x))), kind: self.kind, source_k: self.source_k }
    }

    fn raw(&self, x: &SpherePoint) -> Result<Vec3> {
        match &self.repr {
            Repr::Poly(c) => Ok(eval_components(c, x.vec())),
            Repr::Sampled(f) => f(x),
        }
    }

    /// Value at `x`; fails unless `|v·x| ≤ 1e-10·max(1, |v|)`.
    pub fn eval(&self, x: &SpherePoint) -> Result<Vec3> {
        let v = self.raw(x)?;
        let deviation = v.dot(x.vec()).abs();
        if !(deviation <= 1e-10 * v.norm().max(1.0)) {
            return Err(Error::NotTangent { deviation });
        }
        Ok(v)
    }

    pub fn scale(&self, s: f64) -> Self {
        let repr = match &self.repr {
            Repr::Poly(c) => Repr::Poly(Box::new(std::array::from_fn(|i| c[i].scale(s)))),
            Repr::Sampled(f) => {
                let f = f.clone();
                Repr::Sampled(Arc::new(move |x| f(x).map(|v| v * s)))
            }
        };
        Self { repr, kind: self.kind, source_k: self.source_k }
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        let kind = if self.kind == other.kind { self.kind } else { FieldKind::General };
        let source_k = if self.source_k == other.source_k { self.source_k } else { None };
        let repr = match (&self.repr, &other.repr) {
            (Repr::Poly(a), Repr::Poly(b)) => Repr::Poly(Box::new(std::array::from_fn(|i| &a[i] + &b[i].scale(sign)))),
            _ => {
                let (a, b) = (self.clone(), other.clone());
                Repr::Sampled(Arc::new(move |x| Ok(a.raw(x)? + b.raw(x)? * sign)))
            }
        };
        Self { repr, kind, source_k }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1.0)
    }
}

/// `∇F − (x·∇F) x` for any polynomial `F`.
pub fn surface_gradient(p: &Poly) -> TangentField {
    TangentField::from_components(project_components(&p.gradient()))
}

pub fn grad_field(p: &HarmonicPoly) -> TangentField {
    surface_gradient(p.poly()).with_meta(FieldKind::Gradient, Some(p.k()))
}

/// `⋆ξ(x) = x × ξ(x)`.
pub fn star(xi: &TangentField) -> TangentField {
    let kind = match xi.kind {
        FieldKind::Gradient => FieldKind::StarGradient,
        FieldKind::StarGradient => FieldKind::Gradient,
        FieldKind::General => FieldKind::General,
    };
    let repr = match &xi.repr {
        Repr::Poly(v) => {
            let x = [Poly::coord(0), Poly::coord(1), Poly::coord(2)];
            let cross = |i: usize, j: usize| &(&x[i] * &v[j]) - &(&x[j] * &v[i]);
            Repr::Poly(Box::new([cross(1, 2), cross(2, 0), cross(0, 1)]))
        }
        Repr::Sampled(_) => {
            let f = xi.clone();
            Repr::Sampled(Arc::new(move |x| Ok(x.vec().cross(&f.raw(x)?))))
        }
    };
    TangentField { repr, kind, source_k: xi.source_k }
}

struct FdParts {
    ds: Vec3,
    dt: Vec3,
    lap: Vec3,
    xs: Vec3,
    xt: Vec3,
    conformal: f64,
}

fn fd_parts(xi: &TangentField, x: &SpherePoint) -> Result<FdParts> {
    let coord = stereo_project(x, x.active_chart())?;
    let (_, ds, dt, lap) = chart_finite_differences(|p| xi.raw(p), &coord)?;
    let (xs, xt) = embedding_derivatives(&coord);
    Ok(FdParts { ds, dt, lap, xs, xt, conformal: crate::sphere::conformal_factor(&coord) })
}

/// `Δ_{S²}` applied to each Cartesian component, without projection.
pub fn componentwise_laplacian_at(xi: &TangentField, x: &SpherePoint) -> Result<Vec3> {
    match &xi.repr {
        Repr::Poly(c) => Ok(Vec3::new(
            c[0].sphere_laplacian().eval(x.vec()),
            c[1].sphere_laplacian().eval(x.vec()),
            c[2].sphere_laplacian().eval(x.vec()),
        )),
        Repr::Sampled(_) => {
            let d = fd_parts(xi, x)?;
            Ok(d.lap / d.conformal)
        }
    }
}

/// `(Δξ)^T`: componentwise Laplacian followed by tangential projection.
pub fn tangential_laplacian(xi: &TangentField) -> TangentField {
    let meta = (xi.kind, xi.source_k);
    match &xi.repr {
        Repr::Poly(c) => {
            let lap: [Poly; 3] = std::array::from_fn(|i| c[i].sphere_laplacian());
            TangentField::from_components(project_components(&lap)).with_meta(meta.0, meta.1)
        }
        Repr::Sampled(_) => {
            let f = xi.clone();
            TangentField {
                repr: Repr::Sampled(Arc::new(move |x| {
                    let v = componentwise_laplacian_at(&f, x)?;
                    let n = x.vec();
                    Ok(v - n * n.dot(&v))
                })),
                kind: meta.0,
                source_k: meta.1,
            }
        }
    }
}

/// Surface divergence `Σ eᵢ·∇_{eᵢ}ξ`.
pub fn divergence(xi: &TangentField) -> ScalarField {
    match &xi.repr {
        Repr::Poly(c) => {
            // tr(Dξ) − xᵀ(Dξ)x on the sphere.
            let x = [Poly::coord(0), Poly::coord(1), Poly::coord(2)];
            let mut out = Poly::zero();
            for i in 0..3 {
                out = &out + &c[i].deriv(i);
                for j in 0..3 {
                    out = &out - &(&(&x[i] * &x[j]) * &c[i].deriv(j));
                }
            }
            ScalarField::Poly(out)
        }
        Repr::Sampled(_) => {
            let f = xi.clone();
            ScalarField::Sampled(Arc::new(move |x| {
                let d = fd_parts(&f, x)?;
                Ok((d.xs.dot(&d.ds) + d.xt.dot(&d.dt)) / d.conformal)
            }))
        }
    }
}

/// `−div(⋆ξ)`, the scalar with `Δg = curl ξ` for `ξ = ∇f + ⋆∇g`.
pub fn curl(xi: &TangentField) -> ScalarField {
    match divergence(&star(xi)) {
        ScalarField::Poly(p) => ScalarField::Poly(p.scale(-1.0)),
        ScalarField::Sampled(f) => ScalarField::Sampled(Arc::new(move |x| f(x).map(|v| -v))),
    }
}

/// `∫ ⟨a, b⟩ dA`.
pub fn inner(a: &TangentField, b: &TangentField, grid: &QuadratureGrid) -> Result<f64> {
    let mut acc = 0.0;
    for n in grid.nodes() {
        acc += n.weight * a.eval(&n.point)?.dot(&b.eval(&n.point)?);
    }
    Ok(acc)
}

/// `max_nodes |a − b|`.
pub fn sup_distance(a: &TangentField, b: &TangentField, grid: &QuadratureGrid) -> Result<f64> {
    let mut m: f64 = 0.0;
    for n in grid.nodes() {
        m = m.max((a.eval(&n.point)? - b.eval(&n.point)?).norm());
    }
    Ok(m)
}

pub fn sup_norm(a: &TangentField, grid: &QuadratureGrid) -> Result<f64> {
    let mut m: f64 = 0.0;
    for n in grid.nodes() {
        m = m.max(a.eval(&n.point)?.norm());
    }
    Ok(m)
}

/// `max_nodes |(Δξ)^T − λξ|`.
pub fn eigen_residual(xi: &TangentField, lambda: f64, grid: &QuadratureGrid) -> Result<f64> {
    sup_distance(&tangential_laplacian(xi), &xi.scale(lambda), grid)
}

/// `max_nodes |Δξ·x + 2 div ξ|`.
pub fn normal_part_residual(xi: &TangentField, grid: &QuadratureGrid) -> Result<f64> {
    let div = divergence(xi);
    let mut m: f64 = 0.0;
    for n in grid.nodes() {
        let lap = componentwise_laplacian_at(xi, &n.point)?;
        m = m.max((lap.dot(n.point.vec()) + 2.0 * div.eval(&n.point)?).abs());
    }
    Ok(m)
}

#[derive(Clone, Debug)]
pub struct HodgeParts {
    /// Zero-mean potential of the gradient part.
    pub f_potential: ScalarField,
    /// Zero-mean potential of the star-gradient part.
    pub g_potential: ScalarField,
    pub grad_part: TangentField,
    pub star_part: TangentField,
    /// `max_nodes |ξ − ∇f − ⋆∇g|`.
    pub reconstruction_residual: f64,
}

pub fn helmholtz_hodge(xi: &TangentField, grid: &QuadratureGrid) -> Result<HodgeParts> {
    helmholtz_hodge_to(xi, grid, DEFAULT_K_MAX)
}

/// `ξ = ∇f + ⋆∇g` with `f, g` expanded in harmonics of degree `1..=k_max`.
///
/// Coefficients come from the weak forms `∫ξ·∇Y = k(k+1) f_Y` and
/// `∫ξ·⋆∇Y = k(k+1) g_Y`, which are `Δf = div ξ` and `Δg = curl ξ` tested
/// against `Y` and need only values of `ξ`.
pub fn helmholtz_hodge_to(xi: &TangentField, grid: &QuadratureGrid, k_max: u32) -> Result<HodgeParts> {
    let values: Vec<Vec3> = grid.nodes().iter().map(|n| xi.eval(&n.point)).collect::<Result<_>>()?;
    let mut f = Poly::zero();
    let mut g = Poly::zero();
    for k in 1..=k_max {
        let scale = 1.0 / (k * (k + 1)) as f64;
        for y in harmonic_basis(k).iter() {
            let grad = project_components(&y.poly().gradient());
            let (mut a, mut b) = (0.0, 0.0);
            for (n, v) in grid.nodes().iter().zip(&values) {
                let gy = eval_components(&grad, n.point.vec());
                a += n.weight * v.dot(&gy);
                b += n.weight * v.dot(&n.point.vec().cross(&gy));
            }
            f = &f + &y.poly().scale(a * scale);
            g = &g + &y.poly().scale(b * scale);
        }
    }
    let grad_part = surface_gradient(&f).with_meta(FieldKind::Gradient, None);
    let star_part = star(&surface_gradient(&g).with_meta(FieldKind::Gradient, None));
    let mut residual: f64 = 0.0;
    for (n, v) in grid.nodes().iter().zip(&values) {
        residual = residual.max((v - grad_part.eval(&n.point)? - star_part.eval(&n.point)?).norm());
    }
    if residual > 1e-4 {
        return Err(Error::TruncationError { residual });
    }
    Ok(HodgeParts {
        f_potential: ScalarField::Poly(f),
        g_potential: ScalarField::Poly(g),
        grad_part,
        star_part,
        reconstruction_residual: residual,
    })
}

/// `J_ε ξ = (1 − ε((Δ·)^T − 2))((Δ·)^T + 2) ξ`.
pub fn j_epsilon(xi: &TangentField, epsilon: f64) -> TangentField {
    let eta = tangential_laplacian(xi).add(&xi.scale(2.0));
    let out = eta.scale(1.0 + 2.0 * epsilon).sub(&tangential_laplacian(&eta).scale(epsilon));
    out.with_meta(xi.kind, xi.source_k)
}

/// `∇x₁, ∇x₂, ∇x₃, ⋆∇x₁, ⋆∇x₂, ⋆∇x₃`, the kernel of `J_ε`.
pub fn kernel_fields() -> [TangentField; 6] {
    let grads: [TangentField; 3] =
        std::array::from_fn(|i| surface_gradient(&Poly::coord(i)).with_meta(FieldKind::Gradient, Some(1)));
    [grads[0].clone(), grads[1].clone(), grads[2].clone(), star(&grads[0]), star(&grads[1]), star(&grads[2])]
}

/// L²-orthogonal split of `ξ` into its kernel part and the rest.
pub fn kernel_projection(xi: &TangentField, grid: &QuadratureGrid) -> Result<(TangentField, TangentField)> {
    let basis = kernel_fields();
    let mut gram = DMatrix::zeros(6, 6);
    let mut rhs = DVector::zeros(6);
    for (i, b) in basis.iter().enumerate() {
        for (j, c) in basis.iter().enumerate() {
            gram[(i, j)] = inner(b, c, grid)?;
        }
        rhs[i] = inner(b, xi, grid)?;
    }
    let coeffs = gram
        .cholesky()
        .ok_or_else(|| Error::DomainError("grid too coarse for the kernel Gram matrix".into()))?
        .solve(&rhs);
    let mut kernel = TangentField::zero();
    for (c, b) in coeffs.iter().zip(&basis) {
        kernel = kernel.add(&b.scale(*c));
    }
    let complement = xi.sub(&kernel);
    Ok((kernel.with_meta(FieldKind::General, Some(1)), complement))
}

/// `((λ_k + 2)/λ_k, (λ_k² − 4)/λ_k²)` for `λ_k = −k(k+1)`.
pub fn spectral_gap_constants(k: u32) -> (f64, f64) {
    let l = -((k * (k + 1)) as f64);
    ((l + 2.0) / l, (l * l - 4.0) / (l * l))
}
