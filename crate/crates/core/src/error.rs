use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point lies on the projection pole of the {0:?} chart")]
    Pole(crate::sphere::Chart),
    #[error("invalid quadrature resolution ({n_polar}, {n_azimuthal}): need n_polar >= 2 and n_azimuthal >= 4")]
    InvalidResolution { n_polar: usize, n_azimuthal: usize },
    #[error("non-finite integrand value at node {node}")]
    NonFiniteValue { node: usize },
    #[error("map has no analytic derivatives; switch to finite differences")]
    DerivativeUnavailable,
    #[error("map value has norm {norm}, too far from the unit sphere")]
    NotOnSphere { norm: f64 },
    #[error("Mobius image is the point at infinity")]
    InfinityResult,
    #[error("matrix is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("matrix is singular (determinant {det:e})")]
    Singular { det: f64 },
    #[error("degree integral {value} is not close to an integer")]
    NonIntegerDegree { value: f64 },
    #[error("expected degree {expected}, found {found}")]
    WrongDegree { expected: i64, found: i64 },
    #[error("map does not have degree one (found {found})")]
    NotDegreeOne { found: i64 },
    #[error("map is not close enough to a Mobius transformation (Dirichlet energy {energy})")]
    NotCloseToMobius { energy: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("line search failed at iteration {iteration} (gradient sup-norm {gradient:e})")]
    LineSearchFailure { iteration: usize, gradient: f64 },
    #[error("argument outside the admissible domain: {0}")]
    DomainError(String),
    #[error("non-finite reduced integrand at r = {r}")]
    NonFiniteIntegrand { r: f64 },
    #[error("field is not tangent to the sphere (normal component {deviation:e})")]
    NotTangent { deviation: f64 },
    #[error("polynomial is not harmonic and homogeneous (residual {residual:e})")]
    NotHarmonic { residual: f64 },
    #[error("Hodge reconstruction residual {residual:e} exceeds truncation tolerance")]
    TruncationError { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
