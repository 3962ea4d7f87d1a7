//! The identity suite behind `epsharm verify`.

use std::f64::consts::PI;

use epsharm::energy::{
    dilation_energy_closed_form, dilation_energy_dloglambda, eps_energy, eps_lambda_energy, verify_pullback,
};
use epsharm::maps::{Antipodal, Constant, Identity, PolynomialWarp, Twist};
use epsharm::mobius::{compose, MobiusMatrix};
use epsharm::sphere::{build_grid, MapField, QuadratureGrid};
use epsharm::symmetric::{lift_profile, Profile};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::real;

pub const PASS_RULE: &str =
    "equal: |measured - expected| <= tolerance * max(1, |expected|); at_least: measured >= expected - tolerance * max(1, |expected|)";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Equal,
    AtLeast,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub citation: &'static str,
}

impl Check {
    pub fn passed(&self) -> bool {
        let slack = self.tolerance * self.expected.abs().max(1.0);
        match self.relation {
            Relation::Equal => (self.measured - self.expected).abs() <= slack,
            Relation::AtLeast => self.measured >= self.expected - slack,
        }
    }

    fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "status": if self.passed() { "pass" } else { "fail" },
            "relation": match self.relation { Relation::Equal => "equal", Relation::AtLeast => "at_least" },
            "measured": real(self.measured),
            "expected": real(self.expected),
            "tolerance": real(self.tolerance),
            "citation": self.citation,
        })
    }
}

pub struct VerificationReport {
    pub grid: (usize, usize),
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed()).count()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": "verify",
            "grid": { "n_polar": self.grid.0, "n_azimuthal": self.grid.1 },
            "seed": self.seed,
            "pass_rule": PASS_RULE,
            "passed": self.checks.len() - self.failures(),
            "failed": self.failures(),
            "checks": self.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        })
    }
}

fn random_su2<R: Rng>(rng: &mut R) -> MobiusMatrix {
    let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a = Complex64::new(v[0], v[1]) / n;
    let b = Complex64::new(v[2], v[3]) / n;
    MobiusMatrix::new(a, -b.conj(), b, a.conj()).expect("unit quaternion has determinant one")
}

/// `U·diag(√λ, 1/√λ)` with `λ` uniform in `[1, max_lambda)`; the right
/// rotation is left out so that the weight sits at `η = x`.
fn random_left_mobius<R: Rng>(rng: &mut R, max_lambda: f64) -> (MobiusMatrix, f64) {
    let lambda = rng.gen_range(1.0..max_lambda);
    (compose(&random_su2(rng), &MobiusMatrix::dilation(lambda)), lambda)
}

fn random_mobius<R: Rng>(rng: &mut R, max_lambda: f64) -> MobiusMatrix {
    let (m, _) = random_left_mobius(rng, max_lambda);
    compose(&m, &random_su2(rng).adjoint())
}

fn test_maps() -> [(&'static str, MapField); 3] {
    [
        ("identity", MapField::from_map(Identity)),
        ("twist", MapField::from_map(Twist { amount: 1.0 })),
        ("warp", MapField::from_map(PolynomialWarp { amplitude: 0.3 })),
    ]
}

struct Suite {
    tol: f64,
    checks: Vec<Check>,
}

impl Suite {
    fn eq(&mut self, name: String, measured: f64, expected: f64, citation: &'static str) {
        self.push(name, measured, expected, Relation::Equal, citation);
    }

    fn at_least(&mut self, name: String, measured: f64, bound: f64, citation: &'static str) {
        self.push(name, measured, bound, Relation::AtLeast, citation);
    }

    fn push(&mut self, name: String, measured: f64, expected: f64, relation: Relation, citation: &'static str) {
        self.checks.push(Check { name, measured, expected, tolerance: self.tol, relation, citation });
    }
}

fn dilations(s: &mut Suite, grid: &QuadratureGrid) -> CliResult<()> {
    for lambda in [1.5, 2.0, 5.0] {
        let u = MapField::from_map(MobiusMatrix::dilation(lambda));
        for eps in [0.0, 0.01, 0.1] {
            s.eq(
                format!("dilation_energy[lambda={lambda},eps={eps}]"),
                eps_energy(&u, eps, grid)?.total,
                dilation_energy_closed_form(lambda, eps),
                "E_eps(m_lambda) = 4pi(1 + (2eps/3)(lambda^2 + 1 + lambda^-2))",
            );
        }
    }
    for lambda in [1.2f64, 2.0] {
        let h = 1e-3;
        let e = |t: f64| dilation_energy_closed_form((lambda.ln() + t).exp(), 0.1);
        let fd = (e(-2.0 * h) - 8.0 * e(-h) + 8.0 * e(h) - e(2.0 * h)) / (12.0 * h);
        s.eq(
            format!("dilation_log_derivative[lambda={lambda},eps=0.1]"),
            fd,
            dilation_energy_dloglambda(lambda, 0.1),
            "d/dlog(lambda) E_eps(m_lambda) = (16 pi eps/3)(lambda^2 - lambda^-2)",
        );
    }
    Ok(())
}

fn rotations(s: &mut Suite, grid: &QuadratureGrid, rng: &mut ChaCha8Rng) -> CliResult<()> {
    for i in 0..2 {
        let r = MapField::from_map(random_su2(rng));
        for eps in [0.0, 0.1] {
            s.eq(
                format!("rotation_energy[{i},eps={eps}]"),
                eps_energy(&r, eps, grid)?.total,
                4.0 * PI * (1.0 + 2.0 * eps),
                "E_eps(R) = 4pi(1 + 2eps) for a rotation R",
            );
        }
    }
    Ok(())
}

fn pullbacks(s: &mut Suite, grid: &QuadratureGrid, rng: &mut ChaCha8Rng) -> CliResult<()> {
    for (name, u) in test_maps() {
        let (mut g, mut l): (f64, f64) = (0.0, 0.0);
        for _ in 0..3 {
            let e = verify_pullback(&u, &random_mobius(rng, 3.0), grid)?;
            g = g.max(e.gradient);
            l = l.max(e.laplacian);
        }
        s.eq(
            format!("pullback_gradient_pointwise[{name}]"),
            g,
            0.0,
            "|grad(u o mu_M)|^2(x) = |grad u|^2(mu_M x) / chi_lambda(V* x), max relative deviation over nodes",
        );
        s.eq(
            format!("pullback_laplacian_pointwise[{name}]"),
            l,
            0.0,
            "|lap(u o mu_M)|^2(x) = |lap u|^2(mu_M x) / chi_lambda(V* x)^2, max relative deviation over nodes",
        );

        let m = random_mobius(rng, 3.0);
        s.eq(
            format!("pullback_dirichlet_integrated[{name}]"),
            eps_energy(&u.precompose(m), 0.0, grid)?.dirichlet,
            eps_energy(&u, 0.0, grid)?.dirichlet,
            "(1/2)int |grad(u o mu_M)|^2 = (1/2)int |grad u|^2",
        );
        let (m, lambda) = random_left_mobius(rng, 3.0);
        s.eq(
            format!("pullback_weighted_integrated[{name}]"),
            eps_lambda_energy(&u.precompose(m), 0.1, lambda, grid)?.total,
            eps_energy(&u, 0.1, grid)?.total,
            "E_{eps,lambda}(u o mu_M) = E_eps(u) for M = U diag(lambda^1/2, lambda^-1/2), chi_lambda-weighted energy",
        );
    }
    Ok(())
}

fn degrees(s: &mut Suite, grid: &QuadratureGrid, rng: &mut ChaCha8Rng) -> CliResult<()> {
    let cases = [
        ("identity", MapField::from_map(Identity), 1.0),
        ("antipodal", MapField::from_map(Antipodal), -1.0),
        ("constant", MapField::from_map(Constant::north()), 0.0),
        ("twist", MapField::from_map(Twist { amount: 1.0 }), 1.0),
        ("warp", MapField::from_map(PolynomialWarp { amplitude: 0.3 }), 1.0),
    ];
    for (name, u, d) in &cases {
        let report = eps_energy(u, 0.0, grid)?;
        s.eq(format!("degree[{name}]"), report.degree, *d, "deg u = (1/4pi) int J(u)");
        let moved = eps_energy(&u.precompose(random_mobius(rng, 2.0)), 0.0, grid)?;
        s.eq(format!("degree_after_mobius[{name}]"), moved.degree, *d, "deg(u o mu_M) = deg u");
        s.at_least(
            format!("dirichlet_degree_bound[{name}]"),
            report.dirichlet,
            4.0 * PI * d.abs(),
            "(1/2)int |grad u|^2 >= |int J(u)| = 4pi |deg u|",
        );
    }
    let eps = 0.05;
    for i in 0..4 {
        let coeffs: Vec<f64> = (0..6).map(|j| rng.gen_range(-0.4..0.4) / (j + 1) as f64).collect();
        let u = lift_profile(&Profile::new(1, coeffs));
        s.at_least(
            format!("degree_one_gap[{i},eps={eps}]"),
            eps_energy(&u, eps, grid)?.total,
            4.0 * PI * (1.0 + 2.0 * eps),
            "E_eps(u) >= 4pi(1 + 2eps) for deg u = 1",
        );
    }
    Ok(())
}

pub fn run(cfg: &RunConfig) -> CliResult<VerificationReport> {
    let grid = build_grid(cfg.grid_polar, cfg.grid_azimuthal)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut s = Suite { tol: cfg.tol, checks: Vec::new() };
    dilations(&mut s, &grid)?;
    rotations(&mut s, &grid, &mut rng)?;
    pullbacks(&mut s, &grid, &mut rng)?;
    degrees(&mut s, &grid, &mut rng)?;
    Ok(VerificationReport { grid: (cfg.grid_polar, cfg.grid_azimuthal), seed: cfg.seed, checks: s.checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        let c = |m, e, r| Check {
            name: String::new(),
            measured: m,
            expected: e,
            tolerance: 1e-6,
            relation: r,
            citation: "",
        };
        assert!(c(10.0 + 5e-6, 10.0, Relation::Equal).passed());
        assert!(!c(10.0 + 2e-5, 10.0, Relation::Equal).passed());
        assert!(c(1e-7, 0.0, Relation::Equal).passed());
        assert!(c(100.0, 10.0, Relation::AtLeast).passed());
        assert!(!c(9.9, 10.0, Relation::AtLeast).passed());
    }
}
