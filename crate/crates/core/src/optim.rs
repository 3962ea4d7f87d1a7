//! Small dense optimizers: Nelder–Mead for the six-parameter Möbius search
//! and BFGS with backtracking for the profile coefficients.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop once the simplex values agree to this absolute spread...
    pub f_tol: f64,
    /// ...and its vertices to this sup-norm distance.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_evals: 4000, f_tol: 1e-14, x_tol: 1e-9 }
    }
}

#[derive(Clone, Debug)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Standard Nelder–Mead (reflection 1, expansion 2, contraction ½, shrink ½)
/// from the axis simplex `x0 + step·eᵢ`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = n + 1;

    let converged = loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let size =
            simplex[1..].iter().flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);
        if spread <= opts.f_tol && size <= opts.x_tol {
            break true;
        }
        if evals >= opts.max_evals {
            break false;
        }

        let centroid: Vec<f64> = (0..n).map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < values[0] {
            let xe = along(2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(0.5);
            (xc.clone(), f(&xc))
        } else {
            let xc = along(-0.5);
            (xc.clone(), f(&xc))
        };
        evals += 1;
        if fc < fr.min(values[n]) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[i].iter().zip(&simplex[0]).map(|(v, b)| b + 0.5 * (v - b)).collect();
            values[i] = f(&shrunk);
            simplex[i] = shrunk;
        }
        evals += n;
    };

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    NelderMeadResult { x: simplex[best].clone(), f: values[best], evals, converged }
}

#[derive(Clone, Debug)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Convergence threshold on the gradient sup-norm.
    pub grad_tol: f64,
    /// Sup-norm cap on a single search direction.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { max_iter: 2000, grad_tol: 1e-8, max_step: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BfgsStatus {
    Converged,
    /// No step along a steepest-descent direction lowered the objective.
    Stalled,
}

#[derive(Clone, Debug)]
pub struct BfgsResult {
    pub status: BfgsStatus,
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    /// Objective value after every accepted step, starting with the initial one.
    pub trace: Vec<f64>,
}

fn sup_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Quasi-Newton minimization with an inverse-Hessian BFGS update and an
/// Armijo backtracking search. Accepted steps never increase the objective.
///
/// Close to the optimum the sufficient-decrease test is swamped by rounding
/// in `f`; a step whose predicted decrease is below that level is then
/// accepted if it does not increase `f` and shrinks the gradient. When even
/// a steepest-descent step cannot be accepted the last iterate is returned
/// with [`BfgsStatus::Stalled`].
pub fn bfgs<F>(mut fg: F, x0: &[f64], opts: &BfgsOptions) -> Result<BfgsResult>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut f, g0) = fg(x.as_slice());
    let mut g = DVector::from_vec(g0);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut trace = vec![f];

    for it in 0..opts.max_iter {
        let gnorm = sup_norm(&g);
        if gnorm < opts.grad_tol {
            return Ok(BfgsResult {
                status: BfgsStatus::Converged,
                x: x.data.into(),
                f,
                grad: g.data.into(),
                iterations: it,
                trace,
            });
        }
        if !f.is_finite() || !gnorm.is_finite() {
            return Err(Error::LineSearchFailure { iteration: it, gradient: gnorm });
        }

        let mut p = -(&h * &g);
        let mut slope = g.dot(&p);
        if slope >= 0.0 {
            h = DMatrix::identity(n, n);
            fresh = true;
            p = -g.clone();
            slope = g.dot(&p);
        }
        let pn = sup_norm(&p);
        if pn > opts.max_step {
            p *= opts.max_step / pn;
            slope = g.dot(&p);
        }

        let noise = 64.0 * f64::EPSILON * (1.0 + f.abs());
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = &x + &p * alpha;
            let (fnew, gnew) = fg(xn.as_slice());
            if fnew.is_finite() {
                let gnew = DVector::from_vec(gnew);
                let armijo = fnew <= f + 1e-4 * alpha * slope;
                let flat = -alpha * slope < noise && fnew <= f && sup_norm(&gnew) < gnorm;
                if armijo || flat {
                    accepted = Some((xn, fnew, gnew));
                    break;
                }
            }
            alpha *= 0.5;
        }

        match accepted {
            Some((xn, fnew, gnew)) => {
                let s = &xn - &x;
                let y = &gnew - &g;
                let sy = s.dot(&y);
                if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
                    if fresh {
                        // Scale the initial inverse Hessian before the first update.
                        h *= sy / y.dot(&y);
                        fresh = false;
                    }
                    let rho = 1.0 / sy;
                    let hy = &h * &y;
                    let yhy = y.dot(&hy);
                    h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                        - (&hy * s.transpose() + &s * hy.transpose()) * rho;
                }
                x = xn;
                f = fnew;
                g = gnew;
                trace.push(f);
            }
            None if !fresh => {
                h = DMatrix::identity(n, n);
                fresh = true;
            }
            None => {
                return Ok(BfgsResult {
                    status: BfgsStatus::Stalled,
                    x: x.data.into(),
                    f,
                    grad: g.data.into(),
                    iterations: it,
                    trace,
                })
            }
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual: sup_norm(&g) })
}

/// Newton iteration with a Hessian built from central differences of the
/// gradient. Meant for the last digits of a stiff problem where `f` alone is
/// too noisy to steer a line search: a step is taken if it does not
/// increase `f` and strictly shrinks the gradient sup-norm. Several step
/// lengths are tried before giving up.
pub fn newton_polish<F>(mut fg: F, start: BfgsResult, grad_tol: f64, max_iter: usize) -> Result<BfgsResult>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let BfgsResult { mut x, mut f, grad, mut iterations, mut trace, .. } = start;
    let n = x.len();
    let mut g = DVector::from_vec(grad);
    for _ in 0..max_iter {
        let gnorm = sup_norm(&g);
        if gnorm < grad_tol {
            return Ok(BfgsResult { status: BfgsStatus::Converged, x, f, grad: g.data.into(), iterations, trace });
        }
        let mut hess = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let h = 1e-5 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let gp = fg(&xp).1;
            let gm = fg(&xm).1;
            for i in 0..n {
                hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let eig = hess.clone().symmetric_eigen();
        let floor = 1e-10 * eig.eigenvalues.amax().max(1.0);
        let inv = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.abs().max(floor)));
        let p = -(&eig.eigenvectors * inv * eig.eigenvectors.transpose()) * &g;

        let mut accepted = None;
        for alpha in [1.0, 0.999, 0.99, 0.9, 0.75, 0.5, 0.25, 0.125, 0.0625] {
            let xn: Vec<f64> = x.iter().zip(p.iter()).map(|(a, d)| a + alpha * d).collect();
            let (fnew, gnew) = fg(&xn);
            let gnew = DVector::from_vec(gnew);
            if fnew.is_finite() && fnew <= f && sup_norm(&gnew) < gnorm {
                accepted = Some((xn, fnew, gnew));
                break;
            }
        }
        let Some((xn, fnew, gnew)) = accepted else {
            return Err(Error::LineSearchFailure { iteration: iterations, gradient: gnorm });
        };
        x = xn;
        f = fnew;
        g = gnew;
        trace.push(f);
        iterations += 1;
    }
    let gnorm = sup_norm(&g);
    if gnorm < grad_tol {
        return Ok(BfgsResult { status: BfgsStatus::Converged, x, f, grad: g.data.into(), iterations, trace });
    }
    Err(Error::NoConvergence { iterations, residual: gnorm })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    fn rosenbrock_grad(x: &[f64]) -> (f64, Vec<f64>) {
        let g0 = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]);
        let g1 = 200.0 * (x[1] - x[0] * x[0]);
        (rosenbrock(x), vec![g0, g1])
    }

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let opts = NelderMeadOptions { max_evals: 5000, f_tol: 1e-20, x_tol: 1e-10 };
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], 0.5, &opts);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-7 && (r.x[1] - 1.0).abs() < 1e-7, "{:?}", r.x);
    }

    #[test]
    fn bfgs_finds_rosenbrock_minimum_with_monotone_trace() {
        let r = bfgs(rosenbrock_grad, &[-1.2, 1.0], &BfgsOptions::default()).unwrap();
        assert_eq!(r.status, BfgsStatus::Converged);
        assert!((r.x[0] - 1.0).abs() < 1e-8 && (r.x[1] - 1.0).abs() < 1e-8);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn bfgs_quadratic_in_few_steps() {
        let a = [1.0, 10.0, 100.0, 1000.0];
        let fg = |x: &[f64]| {
            let f = x.iter().zip(&a).map(|(v, k)| 0.5 * k * (v - 1.0) * (v - 1.0)).sum();
            (f, x.iter().zip(&a).map(|(v, k)| k * (v - 1.0)).collect())
        };
        let r = bfgs(fg, &[0.0; 4], &BfgsOptions { max_step: 10.0, ..Default::default() }).unwrap();
        assert!(r.iterations < 40);
        assert!(r.x.iter().all(|v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn newton_polish_finishes_stiff_quadratic() {
        let a = [1.0, 1e3, 1e5];
        let fg = |x: &[f64]| {
            let f = x.iter().zip(&a).map(|(v, k)| 0.5 * k * (v - 0.5) * (v - 0.5)).sum();
            (f, x.iter().zip(&a).map(|(v, k)| k * (v - 0.5)).collect())
        };
        let (f, g) = fg(&[0.4, 0.4, 0.4]);
        let start =
            BfgsResult { status: BfgsStatus::Stalled, x: vec![0.4; 3], f, grad: g, iterations: 0, trace: vec![f] };
        let r = newton_polish(fg, start, 1e-10, 10).unwrap();
        assert_eq!(r.status, BfgsStatus::Converged);
        assert!(r.iterations <= 3);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn bfgs_reports_iteration_cap() {
        let opts = BfgsOptions { max_iter: 3, ..Default::default() };
        let err = bfgs(rosenbrock_grad, &[-1.2, 1.0], &opts).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 3, .. }));
    }
}
