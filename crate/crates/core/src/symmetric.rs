//! Rotationally symmetric maps `u_f(r, θ) = (sin f cos θ, sin f sin θ, cos f)`
//! and the one-dimensional reduction of `E_ε`.
//!
//! With `N = f'² + sin²f / sin²r` and
//! `T = f'' + cot r·f' − sin f cos f / sin²r` one has `|∇u_f|² = N`,
//! `|(Δu_f)^T| = |T|` and `|Δu_f|² = T² + N²`, so
//! `E_ε(u_f) = π∫₀^π (N + ε(T² + N²)) sin r dr`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::jet::Scalar;
use crate::optim::{bfgs, newton_polish, BfgsOptions, BfgsResult, BfgsStatus};
use crate::sphere::{gauss_legendre, MapField, SphereMap};

/// Gauss–Legendre rule in `t = cos r` for `∫₀^π g(r) sin r dr`.
#[derive(Clone, Debug)]
pub struct RadialGrid {
    nodes: Vec<RadialNode>,
}

#[derive(Clone, Copy, Debug)]
pub struct RadialNode {
    pub r: f64,
    pub sin_r: f64,
    pub cos_r: f64,
    pub weight: f64,
}

impl RadialGrid {
    pub fn nodes(&self) -> &[RadialNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub fn radial_grid(n: usize) -> Result<RadialGrid> {
    if n < 2 {
        return Err(Error::InvalidResolution { n_polar: n, n_azimuthal: 1 });
    }
    let (t, w) = gauss_legendre(n);
    let nodes = t
        .iter()
        .zip(&w)
        .map(|(&t, &w)| {
            let sin_r = (1.0 - t * t).sqrt();
            RadialNode { r: sin_r.atan2(t), sin_r, cos_r: t, weight: w }
        })
        .collect();
    Ok(RadialGrid { nodes })
}

/// A profile `f: [0, π] → ℝ` with `f(0) = 0` and `f(π) = nπ`.
pub trait ProfileFn: Send + Sync {
    /// The class `n`.
    fn winding(&self) -> i64;

    fn eval<S: Scalar>(&self, r: S) -> S;

    /// `[f, f', f'']` at `r`.
    fn derivatives(&self, r: f64) -> [f64; 3];

    /// Number of free sine coefficients; `∂f/∂c_j = sin(jr)` for `j = 1..=modes`.
    fn modes(&self) -> usize {
        0
    }
}

/// `f(r) = n·r + Σ_{j=1}^{J} c_j sin(jr)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    n: i64,
    coeffs: Vec<f64>,
}

impl Profile {
    pub fn new(n: i64, coeffs: Vec<f64>) -> Self {
        Self { n, coeffs }
    }

    /// `f(r) = n·r` with `modes` zero coefficients.
    pub fn linear(n: i64, modes: usize) -> Self {
        Self { n, coeffs: vec![0.0; modes] }
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Sine coefficients of `g(r) − n·r` for a profile `g` of class `n`,
    /// i.e. its L² projection onto the first `modes` sine modes. The odd
    /// periodic extension of `g − n·r` is smooth, so the trapezoidal rule
    /// used here converges spectrally.
    pub fn project<P: ProfileFn>(g: &P, modes: usize) -> Self {
        let n = g.winding();
        let m = 2048;
        let samples: Vec<(f64, f64)> = (1..m)
            .map(|k| {
                let r = PI * k as f64 / m as f64;
                (r, g.derivatives(r)[0] - n as f64 * r)
            })
            .collect();
        let coeffs = (1..=modes)
            .map(|j| 2.0 / m as f64 * samples.iter().map(|(r, v)| v * (j as f64 * r).sin()).sum::<f64>())
            .collect();
        Self { n, coeffs }
    }
}

impl ProfileFn for Profile {
    fn winding(&self) -> i64 {
        self.n
    }

    fn eval<S: Scalar>(&self, r: S) -> S {
        let mut acc = r * self.n as f64;
        for (j, c) in self.coeffs.iter().enumerate() {
            acc = acc + (r * (j + 1) as f64).sin() * *c;
        }
        acc
    }

    fn derivatives(&self, r: f64) -> [f64; 3] {
        let mut out = [self.n as f64 * r, self.n as f64, 0.0];
        let (s1, c1) = r.sin_cos();
        let (mut s, mut co) = (s1, c1);
        for (j, c) in self.coeffs.iter().enumerate() {
            let k = (j + 1) as f64;
            out[0] += c * s;
            out[1] += c * k * co;
            out[2] -= c * k * k * s;
            (s, co) = (s * c1 + co * s1, co * c1 - s * s1);
        }
        out
    }

    fn modes(&self) -> usize {
        self.coeffs.len()
    }
}

/// `f_Λ(r) = 2 arctan(Λ tan r)` on `[0, π/2)`, continued by `+2π` on
/// `(π/2, π]`; equivalently `2·atan2(Λ sin r, cos r)`. Class `n = 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialProfile {
    lambda: f64,
}

impl TrialProfile {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::DomainError(format!("trial parameter must be positive, got {lambda}")));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl ProfileFn for TrialProfile {
    fn winding(&self) -> i64 {
        2
    }

    fn eval<S: Scalar>(&self, r: S) -> S {
        (r.sin() * self.lambda).atan2(r.cos()) * 2.0
    }

    fn derivatives(&self, r: f64) -> [f64; 3] {
        let l = self.lambda;
        let (s, c) = r.sin_cos();
        let d = c * c + l * l * s * s;
        [2.0 * (l * s).atan2(c), 2.0 * l / d, 4.0 * s * c * l * (1.0 - l * l) / (d * d)]
    }
}

/// The symmetric map generated by a profile.
#[derive(Clone, Debug)]
pub struct Lifted<P>(pub P);

impl<P: ProfileFn + 'static> SphereMap for Lifted<P> {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> [S; 3] {
        let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let r = rho.atan2(x[2]);
        let f = self.0.eval(r);
        let k = f.sin() / rho;
        [x[0] * k, x[1] * k, f.cos()]
    }
}

pub fn lift_profile<P: ProfileFn + Clone + 'static>(f: &P) -> MapField {
    MapField::from_map(Lifted(f.clone()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedEnergyReport {
    /// `½∫|∇u_f|²`.
    pub gradient_term: f64,
    /// `½∫|Δu_f|²`.
    pub biharmonic_term: f64,
    pub total: f64,
    pub epsilon: f64,
    /// Sup-norm of the coefficient gradient of the discretized energy;
    /// zero for a profile without free coefficients.
    pub el_residual: f64,
}

/// Per-node `(N, T)` and the partial derivatives needed for the gradient.
struct NodeTerms {
    n: f64,
    t: f64,
    dn_df: f64,
    dn_dfp: f64,
    dt_df: f64,
}

fn node_terms(node: &RadialNode, [f, fp, fpp]: [f64; 3]) -> NodeTerms {
    let s2 = node.sin_r * node.sin_r;
    let cot = node.cos_r / node.sin_r;
    let (sf, cf) = f.sin_cos();
    NodeTerms {
        n: fp * fp + sf * sf / s2,
        t: fpp + cot * fp - sf * cf / s2,
        dn_df: 2.0 * sf * cf / s2,
        dn_dfp: 2.0 * fp,
        dt_df: -(cf * cf - sf * sf) / s2,
    }
}

fn check_finite(node: &RadialNode, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteIntegrand { r: node.r })
    }
}

/// `π∫(f'² + sin²f/sin²r) sin r dr`.
pub fn profile_gradient_energy<P: ProfileFn>(f: &P, grid: &RadialGrid) -> Result<f64> {
    let mut acc = 0.0;
    for node in &grid.nodes {
        acc += node.weight * check_finite(node, node_terms(node, f.derivatives(node.r)).n)?;
    }
    Ok(PI * acc)
}

/// Energy terms and the coefficient gradient of `gradient + ε·biharmonic`.
///
/// A single pass over a few hundred nodes is cheaper than spawning work
/// for it, so this runs sequentially; independent minimizations are
/// parallelized one level up.
/// Neumaier-compensated running sum. The minimizer compares energies that
/// differ far below one ulp of a plain sum's error.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

struct KernelOutput {
    gradient_term: f64,
    biharmonic_term: f64,
    total: f64,
    grad: Vec<f64>,
}

fn energy_with_gradient<P: ProfileFn>(f: &P, epsilon: f64, grid: &RadialGrid) -> Result<KernelOutput> {
    let modes = f.modes();
    let mut gsum = CompensatedSum::default();
    let mut bsum = CompensatedSum::default();
    let mut tsum = CompensatedSum::default();
    let mut grad = vec![0.0; modes];
    for node in &grid.nodes {
        let k = node_terms(node, f.derivatives(node.r));
        let g = check_finite(node, k.n)?;
        let b = check_finite(node, k.t * k.t + k.n * k.n)?;
        gsum.add(node.weight * g);
        bsum.add(node.weight * b);
        tsum.add(node.weight * g);
        tsum.add(node.weight * epsilon * b);
        if modes == 0 {
            continue;
        }
        // L = N + ε(T² + N²); ∂T/∂f' = cot r, ∂T/∂f'' = 1.
        let scale = 1.0 + 2.0 * epsilon * k.n;
        let w = node.weight;
        let dl_df = w * (k.dn_df * scale + 2.0 * epsilon * k.t * k.dt_df);
        let dl_dfp = w * (k.dn_dfp * scale + 2.0 * epsilon * k.t * node.cos_r / node.sin_r);
        let dl_dfpp = w * 2.0 * epsilon * k.t;
        // sin(jr), cos(jr) by the angle-addition recurrence.
        let (s1, c1) = (node.sin_r, node.cos_r);
        let (mut s, mut c) = (s1, c1);
        for (j, acc) in grad.iter_mut().enumerate() {
            let jf = (j + 1) as f64;
            *acc += dl_df * s + dl_dfp * jf * c - dl_dfpp * jf * jf * s;
            (s, c) = (s * c1 + c * s1, c * c1 - s * s1);
        }
    }
    for v in grad.iter_mut() {
        *v *= PI;
    }
    Ok(KernelOutput {
        gradient_term: PI * gsum.value(),
        biharmonic_term: PI * bsum.value(),
        total: PI * tsum.value(),
        grad,
    })
}

pub fn profile_full_energy<P: ProfileFn>(f: &P, epsilon: f64, grid: &RadialGrid) -> Result<ReducedEnergyReport> {
    if !(epsilon >= 0.0) {
        return Err(Error::DomainError(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let k = energy_with_gradient(f, epsilon, grid)?;
    Ok(ReducedEnergyReport {
        gradient_term: k.gradient_term,
        biharmonic_term: k.biharmonic_term,
        total: k.total,
        epsilon,
        el_residual: k.grad.iter().fold(0.0, |m, v| m.max(v.abs())),
    })
}

/// Coefficient gradient of the discretized `I(f)`.
pub fn energy_gradient(f: &Profile, epsilon: f64, grid: &RadialGrid) -> Result<Vec<f64>> {
    Ok(energy_with_gradient(f, epsilon, grid)?.grad)
}

pub fn el_residual<P: ProfileFn>(f: &P, epsilon: f64, grid: &RadialGrid) -> Result<f64> {
    Ok(profile_full_energy(f, epsilon, grid)?.el_residual)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialBounds {
    /// `8πΛ²/(Λ²−1) + 128πε/(Λ²−1) + 256πεΛ⁶/(Λ²−1)²`.
    pub upper: f64,
    /// The three summands of `upper`.
    pub components: [f64; 3],
    /// `8π(1 + 2Λ⁻²) + 128πε + 1024πεΛ²`.
    pub simplified: f64,
    /// `8π + 1168π√ε`, the value the simplified bound is dominated by at `Λ = ε^{-1/4}`.
    pub final_bound: f64,
}

pub fn trial_energy_bounds(lambda: f64, epsilon: f64) -> Result<TrialBounds> {
    let l2 = lambda * lambda;
    if !(l2 > 2.0) {
        return Err(Error::DomainError(format!("trial bounds need Λ² > 2, got {l2}")));
    }
    let q = l2 - 1.0;
    let components = [8.0 * PI * l2 / q, 128.0 * PI * epsilon / q, 256.0 * PI * epsilon * l2 * l2 * l2 / (q * q)];
    Ok(TrialBounds {
        upper: components.iter().sum(),
        components,
        simplified: 8.0 * PI * (1.0 + 2.0 / l2) + 128.0 * PI * epsilon + 1024.0 * PI * epsilon * l2,
        final_bound: upper_energy_bound(epsilon),
    })
}

/// `8π + 1168π√ε`.
pub fn upper_energy_bound(epsilon: f64) -> f64 {
    8.0 * PI + 1168.0 * PI * epsilon.sqrt()
}

/// `8π + 32π²ε`.
pub fn lower_energy_bound(epsilon: f64) -> f64 {
    8.0 * PI + 32.0 * PI * PI * epsilon
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundCheck {
    /// `∫₀^π |f' sin f| dr`, the total variation of `cos∘f`.
    pub variation: f64,
    pub energy: f64,
    pub energy_bound: f64,
    pub passed: bool,
    pub diagnostic: String,
}

/// Total variation of `cos∘f` on a uniform partition refined by the points
/// where `f` crosses a multiple of π, so every extremum of `cos∘f` between
/// crossings is included.
fn cos_variation<P: ProfileFn>(f: &P, pieces: usize) -> (f64, usize) {
    let value = |r: f64| f.derivatives(r)[0];
    let mut pts: Vec<f64> = (0..=pieces).map(|i| PI * i as f64 / pieces as f64).collect();
    let mut crossings = 0;
    let mut extra = Vec::new();
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ka, kb) = ((value(a) / PI).floor(), (value(b) / PI).floor());
        if ka == kb {
            continue;
        }
        // One or more multiples of π lie between f(a) and f(b).
        let (lo, hi) = if ka < kb { (ka + 1.0, kb) } else { (kb + 1.0, ka) };
        let mut k = lo;
        while k <= hi {
            let target = k * PI;
            let (mut x0, mut x1) = (a, b);
            let s0 = value(x0) - target;
            for _ in 0..80 {
                let mid = 0.5 * (x0 + x1);
                if (value(mid) - target).signum() == s0.signum() {
                    x0 = mid;
                } else {
                    x1 = mid;
                }
            }
            extra.push(0.5 * (x0 + x1));
            crossings += 1;
            k += 1.0;
        }
    }
    pts.extend(extra);
    pts.sort_by(f64::total_cmp);
    let tv = pts.windows(2).map(|w| (value(w[1]).cos() - value(w[0]).cos()).abs()).sum();
    (tv, crossings)
}

pub fn lower_bound_check<P: ProfileFn>(f: &P, epsilon: f64, grid: &RadialGrid) -> Result<LowerBoundCheck> {
    let (variation, crossings) = cos_variation(f, 4096);
    let report = profile_full_energy(f, epsilon, grid)?;
    let energy_bound = lower_energy_bound(epsilon);
    let mut problems = Vec::new();
    if f.winding() != 2 {
        problems.push(format!("profile has class {} instead of 2", f.winding()));
    }
    // The crossing at f = π itself; f = 0 and f = 2π sit at the endpoints.
    if crossings == 0 {
        problems.push("profile never crosses π".to_string());
    }
    if 2.0 * PI * variation < 8.0 * PI - 1e-6 {
        problems.push(format!("2π∫|f' sin f| = {} is below 8π", 2.0 * PI * variation));
    }
    if report.total < energy_bound - 1e-6 {
        problems.push(format!("energy {} is below 8π + 32π²ε = {}", report.total, energy_bound));
    }
    Ok(LowerBoundCheck {
        variation,
        energy: report.total,
        energy_bound,
        passed: problems.is_empty(),
        diagnostic: problems.join("; "),
    })
}

#[derive(Clone, Debug)]
pub struct MinimizeOptions {
    pub bfgs: BfgsOptions,
    /// Starting coefficients; the default start depends on the class.
    pub initial: Option<Vec<f64>>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { bfgs: BfgsOptions { max_iter: 5000, grad_tol: 1e-8, max_step: 1.0 }, initial: None }
    }
}

#[derive(Clone, Debug)]
pub struct Minimization {
    pub profile: Profile,
    pub report: ReducedEnergyReport,
    /// Energy after every accepted step, starting with the initial energy.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// Default number of sine modes.
pub const DEFAULT_MODES: usize = 24;
/// Default number of radial Gauss nodes.
pub const DEFAULT_RADIAL_NODES: usize = 256;

fn run_bfgs(n: i64, epsilon: f64, start: Vec<f64>, grid: &RadialGrid, opts: &BfgsOptions) -> Result<BfgsResult> {
    let fg = |c: &[f64]| {
        let p = Profile::new(n, c.to_vec());
        match energy_with_gradient(&p, epsilon, grid) {
            Ok(k) => (k.total, k.grad),
            Err(_) => (f64::INFINITY, vec![f64::NAN; c.len()]),
        }
    };
    // Quasi-Newton gets close; the curvature of the high modes then hides
    // further decrease below rounding, so Newton steps finish the job.
    let coarse = BfgsOptions { grad_tol: opts.grad_tol.max(1e-6), ..opts.clone() };
    let r = bfgs(fg, &start, &coarse)?;
    if r.status == BfgsStatus::Converged && r.grad.iter().all(|g| g.abs() < opts.grad_tol) {
        return Ok(r);
    }
    newton_polish(fg, r, opts.grad_tol, 30)
}

/// Minimizes the reduced energy over `n·r + Σ_{j≤J} c_j sin(jr)`.
///
/// For `n = 2` two starts are used, the sine projection of the trial
/// profile `f_Λ` at `Λ = ε^{-1/4}` and the straight profile `2r`; the lower
/// final energy wins.
pub fn minimize_profile(
    n: i64,
    epsilon: f64,
    modes: usize,
    grid: &RadialGrid,
    opts: &MinimizeOptions,
) -> Result<Minimization> {
    if !(epsilon > 0.0 && epsilon < 0.25) {
        return Err(Error::DomainError(format!("epsilon must lie in (0, 0.25), got {epsilon}")));
    }
    if modes < 4 {
        return Err(Error::DomainError(format!("need at least 4 modes, got {modes}")));
    }
    if n < 0 {
        return Err(Error::DomainError(format!("class must be nonnegative, got {n}")));
    }
    let starts: Vec<Vec<f64>> = match (&opts.initial, n) {
        (Some(c), _) => {
            let mut c = c.clone();
            c.resize(modes, 0.0);
            vec![c]
        }
        (None, 2) => {
            let trial = TrialProfile::new(epsilon.powf(-0.25))?;
            vec![Profile::project(&trial, modes).coeffs, vec![0.0; modes]]
        }
        (None, _) => vec![vec![0.0; modes]],
    };

    let mut best: Option<BfgsResult> = None;
    let mut last_err = None;
    for start in starts {
        match run_bfgs(n, epsilon, start, grid, &opts.bfgs) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.f < b.f) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some(best) = best else {
        return Err(last_err.unwrap_or(Error::NoConvergence { iterations: 0, residual: f64::NAN }));
    };
    let profile = Profile::new(n, best.x);
    let report = profile_full_energy(&profile, epsilon, grid)?;
    Ok(Minimization { profile, report, trace: best.trace, iterations: best.iterations })
}
