//! Energy functionals, degree, dilation closed forms, pullback laws and the
//! optimal Möbius normalization.

use std::f64::consts::PI;

use nalgebra::{Matrix6, Vector6};

use crate::error::{Error, Result};
use crate::mobius::{chi_at, compose, exp_algebra, svd, MobiusMatrix};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::sphere::{local_derivatives, LocalDerivatives, MapField, Mat3, QuadratureGrid};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyReport {
    /// `½∫|∇u|²`.
    pub dirichlet: f64,
    /// `½∫χ_λ|Δu|²`.
    pub biharmonic: f64,
    pub total: f64,
    pub epsilon: f64,
    pub lambda: f64,
    /// Quadrature value of `(1/4π)∫J(u)`.
    pub degree: f64,
    pub degree_int: i64,
}

fn node_derivatives(u: &MapField, grid: &QuadratureGrid) -> Result<Vec<LocalDerivatives>> {
    grid.map_nodes(|n| local_derivatives(u, &n.point)).into_iter().collect()
}

pub fn dirichlet_energy(u: &MapField, grid: &QuadratureGrid) -> Result<f64> {
    let d = node_derivatives(u, grid)?;
    let e: Vec<f64> = d.iter().map(|d| d.gradient_sq()).collect();
    Ok(0.5 * grid.weighted_sum(&e)?)
}

pub fn eps_energy(u: &MapField, epsilon: f64, grid: &QuadratureGrid) -> Result<EnergyReport> {
    eps_lambda_energy(u, epsilon, 1.0, grid)
}

/// `½∫(|∇v|² + ε χ_λ |Δv|²)`.
pub fn eps_lambda_energy(v: &MapField, epsilon: f64, lambda: f64, grid: &QuadratureGrid) -> Result<EnergyReport> {
    if !(epsilon >= 0.0) {
        return Err(Error::DomainError(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    if !(lambda >= 1.0) {
        return Err(Error::DomainError(format!("lambda must be at least 1, got {lambda}")));
    }
    let d = node_derivatives(v, grid)?;
    let grad: Vec<f64> = d.iter().map(|d| d.gradient_sq()).collect();
    let jac: Vec<f64> = d.iter().map(|d| d.jacobian()).collect();
    let bih: Vec<f64> = if lambda == 1.0 {
        d.iter().map(|d| d.laplacian().norm_squared()).collect()
    } else {
        d.iter().zip(grid.nodes()).map(|(d, n)| chi_at(lambda, &n.point) * d.laplacian().norm_squared()).collect()
    };
    let dirichlet = 0.5 * grid.weighted_sum(&grad)?;
    let biharmonic = 0.5 * grid.weighted_sum(&bih)?;
    let degree = grid.weighted_sum(&jac)? / (4.0 * PI);
    Ok(EnergyReport {
        dirichlet,
        biharmonic,
        total: dirichlet + epsilon * biharmonic,
        epsilon,
        lambda,
        degree,
        degree_int: degree.round() as i64,
    })
}

/// Degree as a quadrature value and its nearest integer.
pub fn degree(u: &MapField, grid: &QuadratureGrid) -> Result<(f64, i64)> {
    let d = node_derivatives(u, grid)?;
    let jac: Vec<f64> = d.iter().map(|d| d.jacobian()).collect();
    let value = grid.weighted_sum(&jac)? / (4.0 * PI);
    let rounded = value.round();
    if (value - rounded).abs() >= 1e-3 {
        return Err(Error::NonIntegerDegree { value });
    }
    Ok((value, rounded as i64))
}

/// `E_ε(m_λ) = 4π(1 + (2ε/3)(λ² + 1 + λ⁻²))`.
pub fn dilation_energy_closed_form(lambda: f64, epsilon: f64) -> f64 {
    let lambda = if lambda < 1.0 { 1.0 / lambda } else { lambda };
    let l2 = lambda * lambda;
    4.0 * PI * (1.0 + (2.0 * epsilon / 3.0) * (l2 + 1.0 + 1.0 / l2))
}

/// `d/d(log λ) E_ε(m_λ) = (16πε/3)(λ² − λ⁻²)`.
pub fn dilation_energy_dloglambda(lambda: f64, epsilon: f64) -> f64 {
    let l2 = lambda * lambda;
    16.0 * PI * epsilon / 3.0 * (l2 - 1.0 / l2)
}

/// Largest pointwise relative deviations in the two pullback laws.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PullbackErrors {
    pub gradient: f64,
    pub laplacian: f64,
}

/// Checks `|∇u_M|²(x) = |∇u|²(μ_M x)/χ_λ(η)` and
/// `|Δu_M|²(x) = |Δu|²(μ_M x)/χ_λ(η)²` at every node, where `u_M = u∘μ_M`,
/// `M = U D V*` and `η = μ_{V*}(x)`. For diagonal `M` this is `η = x`.
pub fn verify_pullback(u: &MapField, m: &MobiusMatrix, grid: &QuadratureGrid) -> Result<PullbackErrors> {
    let dec = svd(m);
    let vstar = dec.v.adjoint();
    let pulled = u.precompose(*m);
    let rows: Vec<Result<(f64, f64)>> = grid.map_nodes(|n| {
        let x = n.point;
        let lhs = local_derivatives(&pulled, &x)?;
        let rhs = local_derivatives(u, &m.act(&x))?;
        let chi = chi_at(dec.lambda, &vstar.act(&x));
        let g_expected = rhs.gradient_sq() / chi;
        let l_expected = rhs.laplacian().norm_squared() / (chi * chi);
        let rel = |got: f64, want: f64| (got - want).abs() / want.abs().max(1e-12);
        Ok((rel(lhs.gradient_sq(), g_expected), rel(lhs.laplacian().norm_squared(), l_expected)))
    });
    let mut out = PullbackErrors { gradient: 0.0, laplacian: 0.0 };
    for r in rows {
        let (g, l) = r?;
        out.gradient = out.gradient.max(g);
        out.laplacian = out.laplacian.max(l);
    }
    Ok(out)
}

/// `E_ε(u) ≥ 4π(1 + 2ε) − 1e-6` for degree-one maps.
pub fn degree_one_gap_check(u: &MapField, epsilon: f64, grid: &QuadratureGrid) -> Result<bool> {
    let report = eps_energy(u, epsilon, grid)?;
    if (report.degree - 1.0).abs() >= 1e-3 {
        return Err(Error::WrongDegree { expected: 1, found: report.degree_int });
    }
    let bound = 4.0 * PI * (1.0 + 2.0 * epsilon);
    Ok(report.total >= bound - 1e-6)
}

#[derive(Clone, Debug)]
pub struct MobiusSearchOptions {
    /// Simplex budget for each start.
    pub simplex: NelderMeadOptions,
    /// Size of the axis perturbations used as additional starts.
    pub start_step: f64,
    /// Simplex restarts from the incumbent.
    pub restarts: usize,
    /// Gauss–Newton refinement steps after the simplex phase.
    pub polish_steps: usize,
    /// Bound on the directional derivatives of the squared objective.
    pub stationarity_tol: f64,
}

impl Default for MobiusSearchOptions {
    fn default() -> Self {
        Self {
            simplex: NelderMeadOptions { max_evals: 1500, f_tol: 1e-13, x_tol: 1e-7 },
            start_step: 0.5,
            restarts: 2,
            polish_steps: 30,
            stationarity_tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OptimalMobius {
    pub matrix: MobiusMatrix,
    /// `‖∇(u_M − Id)‖_{L²}` at the returned matrix.
    pub residual: f64,
    /// Largest directional derivative of the squared objective along the
    /// six algebra directions.
    pub stationarity: f64,
    pub evaluations: usize,
}

struct MobiusObjective<'a> {
    u: &'a MapField,
    grid: &'a QuadratureGrid,
    evaluations: std::cell::Cell<usize>,
}

impl MobiusObjective<'_> {
    /// Weighted entries of `∇u_M − ∇Id` at every node, nine per node.
    fn residuals(&self, m: &MobiusMatrix) -> Result<Vec<f64>> {
        self.evaluations.set(self.evaluations.get() + 1);
        let pulled = self.u.precompose(*m);
        let rows: Vec<Result<[f64; 9]>> = self.grid.map_nodes(|n| {
            let d = local_derivatives(&pulled, &n.point)?;
            let x = n.point.vec();
            let diff: Mat3 = d.gradient() - (Mat3::identity() - x * x.transpose());
            let s = n.weight.sqrt();
            let mut out = [0.0; 9];
            for (o, v) in out.iter_mut().zip(diff.iter()) {
                *o = s * v;
            }
            Ok(out)
        });
        let mut all = Vec::with_capacity(9 * rows.len());
        for r in rows {
            all.extend_from_slice(&r?);
        }
        Ok(all)
    }

    fn value(&self, m: &MobiusMatrix) -> f64 {
        match self.residuals(m) {
            Ok(r) => r.iter().map(|v| v * v).sum(),
            Err(_) => f64::INFINITY,
        }
    }
}

fn perturb(base: &MobiusMatrix, p: &[f64]) -> MobiusMatrix {
    let mut q = [0.0; 6];
    q.copy_from_slice(&p[..6]);
    compose(base, &exp_algebra(&q))
}

/// The matrix `M` minimizing `‖∇(u∘μ_M − Id)‖_{L²}` over PSL(2,ℂ).
///
/// Simplex search in the exponential chart from the identity and six axis
/// perturbations, restarted from the incumbent, then a few Gauss–Newton
/// steps on the residual vector.
pub fn optimal_mobius(u: &MapField, grid: &QuadratureGrid, opts: &MobiusSearchOptions) -> Result<OptimalMobius> {
    let report = eps_energy(u, 0.0, grid)?;
    if (report.degree - 1.0).abs() >= 1e-3 {
        return Err(Error::NotDegreeOne { found: report.degree_int });
    }
    if report.dirichlet >= 4.0 * PI + 1.0 {
        return Err(Error::NotCloseToMobius { energy: report.dirichlet });
    }
    let obj = MobiusObjective { u, grid, evaluations: std::cell::Cell::new(0) };

    let mut starts = vec![MobiusMatrix::identity()];
    for k in 0..6 {
        let mut p = [0.0; 6];
        p[k] = opts.start_step;
        starts.push(exp_algebra(&p));
    }
    let mut best = (MobiusMatrix::identity(), f64::INFINITY);
    for s in &starts {
        let r = nelder_mead(|p| obj.value(&perturb(s, p)), &[0.0; 6], 0.25, &opts.simplex);
        if r.f < best.1 {
            best = (perturb(s, &r.x), r.f);
        }
    }
    for _ in 0..opts.restarts {
        let base = best.0;
        let r = nelder_mead(|p| obj.value(&perturb(&base, p)), &[0.0; 6], 0.05, &opts.simplex);
        if r.f < best.1 {
            best = (perturb(&base, &r.x), r.f);
        }
    }

    // Gauss–Newton with a Levenberg safeguard, Jacobian by central differences.
    let (mut m, mut f) = best;
    let mut mu = 1e-8;
    for _ in 0..opts.polish_steps {
        let r0 = obj.residuals(&m)?;
        let h = 1e-6;
        let mut cols = Vec::with_capacity(6);
        for k in 0..6 {
            let mut p = [0.0; 6];
            p[k] = h;
            let plus = obj.residuals(&perturb(&m, &p))?;
            p[k] = -h;
            let minus = obj.residuals(&perturb(&m, &p))?;
            cols.push(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<_>>());
        }
        let mut jtj = Matrix6::zeros();
        let mut jtr = Vector6::zeros();
        for i in 0..6 {
            jtr[i] = cols[i].iter().zip(&r0).map(|(a, b)| a * b).sum();
            for j in 0..6 {
                jtj[(i, j)] = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            }
        }
        let mut improved = false;
        for _ in 0..8 {
            let mut lhs = jtj;
            for i in 0..6 {
                lhs[(i, i)] *= 1.0 + mu;
            }
            let Some(step) = lhs.lu().solve(&(-jtr)) else { break };
            let cand = perturb(&m, step.as_slice());
            let fc = obj.value(&cand);
            if fc <= f {
                let done = f - fc <= 1e-15 * (1.0 + f);
                m = cand;
                f = fc;
                mu = (mu * 0.1).max(1e-12);
                improved = !done;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }

    let h = 1e-5;
    let mut stationarity: f64 = 0.0;
    for k in 0..6 {
        let mut p = [0.0; 6];
        p[k] = h;
        let fp = obj.value(&perturb(&m, &p));
        p[k] = -h;
        let fm = obj.value(&perturb(&m, &p));
        stationarity = stationarity.max(((fp - fm) / (2.0 * h)).abs());
    }
    if stationarity >= opts.stationarity_tol {
        return Err(Error::NoConvergence { iterations: obj.evaluations.get(), residual: stationarity });
    }
    Ok(OptimalMobius { matrix: m, residual: f.max(0.0).sqrt(), stationarity, evaluations: obj.evaluations.get() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{Antipodal, Constant, Identity, PolynomialWarp, Twist};
    use crate::sphere::{build_grid, DerivativeMode};
    use approx::assert_relative_eq;

    fn grid() -> QuadratureGrid {
        build_grid(32, 64).unwrap()
    }

    #[test]
    fn dirichlet_examples() {
        let g = grid();
        assert_relative_eq!(
            dirichlet_energy(&MapField::from_map(Identity), &g).unwrap(),
            4.0 * PI,
            max_relative = 1e-12
        );
        assert!(dirichlet_energy(&MapField::from_map(Constant::north()), &g).unwrap().abs() < 1e-20);
        let m = MapField::from_map(MobiusMatrix::dilation(3.0));
        assert_relative_eq!(dirichlet_energy(&m, &g).unwrap(), 4.0 * PI, max_relative = 1e-10);
    }

    #[test]
    fn eps_energy_examples() {
        let g = grid();
        let r = eps_energy(&MapField::from_map(Identity), 0.1, &g).unwrap();
        assert_relative_eq!(r.total, 4.8 * PI, max_relative = 1e-12);
        assert_relative_eq!(r.total, r.dirichlet + r.epsilon * r.biharmonic, max_relative = 1e-12);
        let r = eps_energy(&MapField::from_map(Constant::north()), 0.3, &g).unwrap();
        assert!(r.total.abs() < 1e-20);
        let r = eps_energy(&MapField::from_map(MobiusMatrix::dilation(2.0)), 0.1, &g).unwrap();
        assert_relative_eq!(r.total, 5.4 * PI, max_relative = 1e-10);
    }

    #[test]
    fn eps_lambda_energy_examples() {
        let g = grid();
        let id = MapField::from_map(Identity);
        let a = eps_lambda_energy(&id, 0.1, 1.0, &g).unwrap();
        assert_eq!(a, eps_energy(&id, 0.1, &g).unwrap());
        let b = eps_lambda_energy(&id, 0.2, 2.0, &g).unwrap();
        assert_relative_eq!(b.biharmonic, 14.0 * PI, max_relative = 1e-12);
        assert!(eps_lambda_energy(&id, 0.1, 0.5, &g).is_err());
        assert!(eps_lambda_energy(&id, -0.1, 1.0, &g).is_err());
    }

    #[test]
    fn change_of_variables_through_a_dilation() {
        let g = build_grid(48, 96).unwrap();
        let u = MapField::from_map(Twist { amount: 0.8 });
        for lambda in [1.5, 2.5] {
            let direct = eps_energy(&u, 0.07, &g).unwrap().total;
            let pulled = u.precompose(MobiusMatrix::dilation(lambda));
            let via = eps_lambda_energy(&pulled, 0.07, lambda, &g).unwrap().total;
            assert_relative_eq!(direct, via, max_relative = 1e-7);
        }
    }

    #[test]
    fn degree_examples() {
        let g = build_grid(16, 32).unwrap();
        assert_eq!(degree(&MapField::from_map(Identity), &g).unwrap().1, 1);
        assert_eq!(degree(&MapField::from_map(Constant::north()), &g).unwrap().1, 0);
        assert_eq!(degree(&MapField::from_map(Antipodal), &g).unwrap().1, -1);
        // A strong dilation concentrates its Jacobian far below the resolution
        // of a coarse grid.
        let coarse = build_grid(4, 8).unwrap();
        let sharp = MapField::from_map(MobiusMatrix::dilation(50.0));
        assert!(matches!(degree(&sharp, &coarse), Err(Error::NonIntegerDegree { .. })));
    }

    #[test]
    fn dilation_closed_forms() {
        assert_relative_eq!(dilation_energy_closed_form(1.0, 0.1), 4.8 * PI, max_relative = 1e-15);
        assert_relative_eq!(dilation_energy_closed_form(2.0, 0.0), 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(dilation_energy_closed_form(2.0, 0.1), 5.4 * PI, max_relative = 1e-15);
        assert_eq!(dilation_energy_dloglambda(1.0, 0.3), 0.0);
        assert_relative_eq!(dilation_energy_dloglambda(2.0, 0.1), 2.0 * PI, max_relative = 1e-15);
        for &l in &[1.2, 2.0, 7.0] {
            let h: f64 = 1e-5;
            let fd = (dilation_energy_closed_form(l * h.exp(), 0.1) - dilation_energy_closed_form(l * (-h).exp(), 0.1))
                / (2.0 * h);
            assert_relative_eq!(fd, dilation_energy_dloglambda(l, 0.1), max_relative = 1e-6);
            assert_eq!(dilation_energy_closed_form(l, 0.1), dilation_energy_closed_form(1.0 / l, 0.1));
        }
    }

    #[test]
    fn pullback_examples() {
        let g = build_grid(12, 24).unwrap();
        let id = MapField::from_map(Identity);
        let e = verify_pullback(&id, &MobiusMatrix::identity(), &g).unwrap();
        assert!(e.gradient < 1e-13 && e.laplacian < 1e-13);
        let e = verify_pullback(&id, &MobiusMatrix::dilation(2.0), &g).unwrap();
        assert!(e.gradient < 1e-12 && e.laplacian < 1e-12, "{e:?}");
        let m = MobiusMatrix::from_reals([0.9, 0.3, -0.4, 1.1, 0.2, -0.7, 1.3, 0.5]).unwrap();
        for u in [MapField::from_map(Twist { amount: 1.1 }), MapField::from_map(PolynomialWarp { amplitude: 0.2 })] {
            let e = verify_pullback(&u, &m, &g).unwrap();
            assert!(e.gradient < 1e-10 && e.laplacian < 1e-10, "{e:?}");
            let fd = u.with_mode(DerivativeMode::FiniteDifference);
            let e = verify_pullback(&fd, &m, &g).unwrap();
            assert!(e.gradient < 1e-6 && e.laplacian < 1e-6, "{e:?}");
        }
    }

    #[test]
    fn gap_check_examples() {
        let g = grid();
        assert!(degree_one_gap_check(&MapField::from_map(Identity), 0.1, &g).unwrap());
        assert!(degree_one_gap_check(&MapField::from_map(MobiusMatrix::dilation(2.0)), 0.1, &g).unwrap());
        let err = degree_one_gap_check(&MapField::from_map(Antipodal), 0.1, &g).unwrap_err();
        assert_eq!(err, Error::WrongDegree { expected: 1, found: -1 });
    }

    #[test]
    fn optimal_mobius_of_identity() {
        let g = build_grid(12, 24).unwrap();
        let r = optimal_mobius(&MapField::from_map(Identity), &g, &Default::default()).unwrap();
        assert!(r.matrix.projective_distance(&MobiusMatrix::identity()) < 1e-7, "{r:?}");
        assert!(r.residual < 1e-7);
    }

    #[test]
    fn optimal_mobius_rejects_wrong_degree() {
        let g = build_grid(12, 24).unwrap();
        let err = optimal_mobius(&MapField::from_map(Antipodal), &g, &Default::default()).unwrap_err();
        assert_eq!(err, Error::NotDegreeOne { found: -1 });
    }
}
