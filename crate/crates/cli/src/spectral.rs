//! `epsharm spectral`: eigenfield residuals per degree and kind, Hodge and
//! Jacobi-kernel checks on seeded band-limited fields.

use epsharm::spectral::{
    eigen_residual, grad_field, harmonic_basis, helmholtz_hodge, inner, j_epsilon, kernel_fields, kernel_projection,
    star, sup_norm, TangentField,
};
use epsharm::sphere::build_grid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::real;

pub struct SpectralOutput {
    pub report: Value,
    pub failures: usize,
}

fn band_limited(rng: &mut ChaCha8Rng, kmax: u32) -> TangentField {
    let mut out = TangentField::zero();
    for k in 1..=kmax {
        for y in harmonic_basis(k).iter() {
            let g = grad_field(y);
            out = out.add(&g.scale(rng.gen_range(-1.0..1.0)));
            out = out.add(&star(&g).scale(rng.gen_range(-1.0..1.0)));
        }
    }
    out
}

pub fn run(cfg: &RunConfig) -> CliResult<SpectralOutput> {
    // Exact for the Hodge projections of fields up to degree kmax.
    let (np, na) = (2 * cfg.kmax as usize + 16, 4 * cfg.kmax as usize + 32);
    let grid = build_grid(np, na)?;
    let tol = cfg.tol;
    let mut failures = 0;
    let mut status = |ok: bool| {
        if !ok {
            failures += 1;
        }
        if ok {
            "pass"
        } else {
            "fail"
        }
    };

    let mut eigen = Vec::new();
    for k in 1..=cfg.kmax {
        let l = -f64::from(k * (k + 1));
        let basis = harmonic_basis(k);
        for (kind, starred) in [("gradient", false), ("star_gradient", true)] {
            let (mut exact, mut sampled): (f64, f64) = (0.0, 0.0);
            for y in basis.iter() {
                let g = grad_field(y);
                let f = if starred { star(&g) } else { g };
                exact = exact.max(eigen_residual(&f, l, &grid)?);
                sampled = sampled.max(eigen_residual(&f.sampled(), l, &grid)?);
            }
            eigen.push(json!({
                "k": k,
                "kind": kind,
                "eigenvalue": real(l),
                "fields": basis.len(),
                "residual": real(exact),
                "sampled_residual": real(sampled),
                "status": status(exact < tol),
            }));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut hodge = Vec::new();
    for i in 0..3 {
        let xi = band_limited(&mut rng, cfg.kmax);
        let h = helmholtz_hodge(&xi, &grid)?;
        let norm = inner(&xi, &xi, &grid)?;
        let orth = inner(&h.grad_part, &h.star_part, &grid)?.abs() / norm;
        let (kern, comp) = kernel_projection(&xi, &grid)?;
        let split = inner(&kern, &comp, &grid)?.abs() / norm;
        hodge.push(json!({
            "field": i,
            "reconstruction_residual": real(h.reconstruction_residual),
            "orthogonality": real(orth),
            "kernel_split_orthogonality": real(split),
            "status": status(h.reconstruction_residual < tol && orth < tol && split < tol),
        }));
    }

    let eps = 0.1;
    let mut kernel: f64 = 0.0;
    for f in kernel_fields() {
        kernel = kernel.max(sup_norm(&j_epsilon(&f, eps), &grid)? / sup_norm(&f, &grid)?);
    }
    let kernel_status = status(kernel < tol);

    let report = json!({
        "command": "spectral",
        "kmax": cfg.kmax,
        "grid": { "n_polar": np, "n_azimuthal": na },
        "seed": cfg.seed,
        "tolerance": real(tol),
        "eigen": eigen,
        "hodge": hodge,
        "jacobi_kernel": { "epsilon": real(eps), "relative_sup": real(kernel), "status": kernel_status },
        "failed": failures,
    });
    Ok(SpectralOutput { report, failures })
}
