//! `epsharm minimize` and `epsharm sweep`.

use std::f64::consts::PI;

use epsharm::optim::BfgsOptions;
use epsharm::symmetric::{
    lower_energy_bound, minimize_profile, radial_grid, upper_energy_bound, Minimization, MinimizeOptions, ProfileFn,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{csv_text, fmt_real, real, reals};

pub const PROFILE_POINTS: usize = 1024;

fn options(cfg: &RunConfig) -> MinimizeOptions {
    let base = MinimizeOptions::default();
    MinimizeOptions { bfgs: BfgsOptions { grad_tol: cfg.grad_tol, ..base.bfgs }, initial: None }
}

fn minimize_at(cfg: &RunConfig, n: i64, epsilon: f64) -> CliResult<Minimization> {
    let grid = radial_grid(cfg.radial_nodes)?;
    let m = minimize_profile(n, epsilon, cfg.modes, &grid, &options(cfg))?;
    Ok(m)
}

pub struct MinimizeOutput {
    pub report: Value,
    pub profile_csv: String,
    /// Set when the final gradient is above `grad_tol`.
    pub unconverged: Option<String>,
}

pub fn run_minimize(cfg: &RunConfig) -> CliResult<MinimizeOutput> {
    let m = minimize_at(cfg, cfg.n, cfg.epsilon)?;
    let r = &m.report;
    let report = json!({
        "n": cfg.n,
        "epsilon": real(cfg.epsilon),
        "modes": cfg.modes,
        "energy": real(r.total),
        "gradient_term": real(r.gradient_term),
        "biharmonic_term": real(r.biharmonic_term),
        "el_residual": real(r.el_residual),
        "iterations": m.iterations,
        "radial_nodes": cfg.radial_nodes,
        "coefficients": reals(m.profile.coeffs()),
    });
    let rows: Vec<Vec<String>> = (0..PROFILE_POINTS)
        .map(|i| {
            let r = PI * i as f64 / (PROFILE_POINTS - 1) as f64;
            let [f, fp, _] = m.profile.derivatives(r);
            vec![fmt_real(r), fmt_real(f), fmt_real(fp)]
        })
        .collect();
    let unconverged = (!(r.el_residual <= cfg.grad_tol))
        .then(|| format!("el_residual {:e} above grad_tol {:e}", r.el_residual, cfg.grad_tol));
    Ok(MinimizeOutput { report, profile_csv: csv_text(&["r", "f", "fprime"], &rows), unconverged })
}

pub const SWEEP_HEADER: [&str; 7] =
    ["epsilon", "energy", "gradient_term", "biharmonic_term", "lower_bound", "upper_bound", "status"];

#[derive(Clone, Debug, PartialEq)]
pub enum RowStatus {
    Ok,
    BelowLowerBound,
    AboveUpperBound,
    Decreasing,
    Failed(String),
}

impl RowStatus {
    fn label(&self) -> String {
        match self {
            RowStatus::Ok => "ok".into(),
            RowStatus::BelowLowerBound => "below_lower_bound".into(),
            RowStatus::AboveUpperBound => "above_upper_bound".into(),
            RowStatus::Decreasing => "decreasing".into(),
            // Keep the message inside one CSV field.
            RowStatus::Failed(msg) => format!("failed: {}", msg.replace([',', '\n', '\r'], ";")),
        }
    }
}

pub struct SweepRow {
    pub epsilon: f64,
    pub result: Option<Minimization>,
    pub status: RowStatus,
}

pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub csv: String,
}

impl SweepOutput {
    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| matches!(r.status, RowStatus::Failed(_))).count()
    }

    pub fn flagged_rows(&self) -> usize {
        self.rows.iter().filter(|r| !matches!(r.status, RowStatus::Ok | RowStatus::Failed(_))).count()
    }
}

/// One degree-zero (`n = 2`) minimization per ε; rows run concurrently and
/// are assembled in ascending ε.
pub fn run_sweep(cfg: &RunConfig) -> CliResult<SweepOutput> {
    let eps = cfg.sweep_values();
    let results: Vec<CliResult<Minimization>> = eps.par_iter().map(|&e| minimize_at(cfg, 2, e)).collect();

    let mut rows = Vec::with_capacity(eps.len());
    let mut previous: Option<f64> = None;
    for (&epsilon, res) in eps.iter().zip(results) {
        let (result, status) = match res {
            Err(e) => (None, RowStatus::Failed(e.to_string())),
            Ok(m) => {
                let e = m.report.total;
                let status = if m.report.el_residual > cfg.grad_tol {
                    RowStatus::Failed(format!("el_residual {:e} above grad_tol", m.report.el_residual))
                } else if !(e > lower_energy_bound(epsilon)) {
                    RowStatus::BelowLowerBound
                } else if !(e < upper_energy_bound(epsilon)) {
                    RowStatus::AboveUpperBound
                } else if previous.is_some_and(|p| e < p) {
                    RowStatus::Decreasing
                } else {
                    RowStatus::Ok
                };
                previous = Some(e);
                (Some(m), status)
            }
        };
        rows.push(SweepRow { epsilon, result, status });
    }

    let lines: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let (energy, grad, bih) = match &r.result {
                Some(m) => {
                    (fmt_real(m.report.total), fmt_real(m.report.gradient_term), fmt_real(m.report.biharmonic_term))
                }
                None => (String::new(), String::new(), String::new()),
            };
            vec![
                fmt_real(r.epsilon),
                energy,
                grad,
                bih,
                fmt_real(lower_energy_bound(r.epsilon)),
                fmt_real(upper_energy_bound(r.epsilon)),
                r.status.label(),
            ]
        })
        .collect();
    let csv = csv_text(&SWEEP_HEADER, &lines);
    Ok(SweepOutput { rows, csv })
}

/// Maps sweep row outcomes onto the exit-code contract.
pub fn sweep_verdict(out: &SweepOutput) -> CliResult<()> {
    match (out.failed_rows(), out.flagged_rows()) {
        (0, 0) => Ok(()),
        (0, k) => Err(CliError::ChecksFailed(k)),
        (k, _) => Err(CliError::Convergence(format!("{k} sweep rows failed"))),
    }
}
