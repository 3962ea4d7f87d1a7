//! `epsharm`: verification suites, symmetric minimizations, ε-sweeps and
//! Möbius/spectral diagnostics.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
//! 3 convergence failure.

// Negated float comparisons are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod minimize;
mod mobius;
mod output;
mod spectral;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Command, Overrides, RunConfig, Spacing, OUT_DIR_ENV};
use error::{CliError, CliResult};
use output::{json_text, write_file};

#[derive(Parser, Debug)]
#[command(name = "epsharm", version, about = "Regularized harmonic map energies of sphere maps")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; defaults to $EPSHARM_OUT_DIR, then the working directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Polar Gauss–Legendre nodes of the surface grid.
    #[arg(long, global = true)]
    grid_polar: Option<usize>,
    /// Azimuthal nodes of the surface grid.
    #[arg(long, global = true)]
    grid_azimuthal: Option<usize>,
    /// Gauss nodes of the radial grid.
    #[arg(long, global = true)]
    radial_nodes: Option<usize>,
    /// Tolerance of the checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Gradient sup-norm the minimizer must reach.
    #[arg(long, global = true)]
    grad_tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Run the identity suite and write verify.json.
    Verify,
    /// Minimize the reduced energy in class n; writes minimize.json and profile.csv.
    Minimize {
        #[arg(long)]
        n: Option<i64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        modes: Option<usize>,
    },
    /// Degree-zero minimizations over a range of ε; writes sweep.csv.
    Sweep {
        #[arg(long)]
        eps_min: Option<f64>,
        #[arg(long)]
        eps_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// `log` (default) or `linear`.
        #[arg(long)]
        spacing: Option<Spacing>,
        #[arg(long)]
        modes: Option<usize>,
    },
    /// Eigenfield, Hodge and Jacobi-kernel residuals; writes spectral.json.
    Spectral {
        #[arg(long)]
        kmax: Option<u32>,
    },
    /// Decompose a matrix given as a_re,a_im,b_re,b_im,c_re,c_im,d_re,d_im; writes mobius.json.
    Mobius {
        #[arg(long, allow_hyphen_values = true)]
        matrix: Option<String>,
    },
}

impl Cli {
    fn into_parts(self) -> (Command, Overrides) {
        let g = self.global;
        let mut o = Overrides {
            config: g.config,
            seed: g.seed,
            out_dir: g.out_dir,
            grid_polar: g.grid_polar,
            grid_azimuthal: g.grid_azimuthal,
            radial_nodes: g.radial_nodes,
            tol: g.tol,
            grad_tol: g.grad_tol,
            ..Default::default()
        };
        let command = match self.command {
            Sub::Verify => Command::Verify,
            Sub::Minimize { n, eps, modes } => {
                (o.n, o.eps, o.modes) = (n, eps, modes);
                Command::Minimize
            }
            Sub::Sweep { eps_min, eps_max, steps, spacing, modes } => {
                (o.eps_min, o.eps_max, o.steps, o.spacing, o.modes) = (eps_min, eps_max, steps, spacing, modes);
                Command::Sweep
            }
            Sub::Spectral { kmax } => {
                o.kmax = kmax;
                Command::Spectral
            }
            Sub::Mobius { matrix } => {
                o.matrix = matrix;
                Command::Mobius
            }
        };
        (command, o)
    }
}

fn execute(cfg: &RunConfig) -> CliResult<()> {
    match cfg.command {
        Command::Verify => {
            let report = verify::run(cfg)?;
            let text = json_text(&report.to_json());
            write_file(&cfg.out_dir, "verify.json", &text)?;
            print!("{text}");
            match report.failures() {
                0 => Ok(()),
                k => Err(CliError::ChecksFailed(k)),
            }
        }
        Command::Minimize => {
            let out = minimize::run_minimize(cfg)?;
            let text = json_text(&out.report);
            write_file(&cfg.out_dir, "minimize.json", &text)?;
            write_file(&cfg.out_dir, "profile.csv", &out.profile_csv)?;
            print!("{text}");
            match out.unconverged {
                None => Ok(()),
                Some(msg) => Err(CliError::Convergence(msg)),
            }
        }
        Command::Sweep => {
            let out = minimize::run_sweep(cfg)?;
            write_file(&cfg.out_dir, "sweep.csv", &out.csv)?;
            print!("{}", out.csv);
            minimize::sweep_verdict(&out)
        }
        Command::Spectral => {
            let out = spectral::run(cfg)?;
            let text = json_text(&out.report);
            write_file(&cfg.out_dir, "spectral.json", &text)?;
            print!("{text}");
            match out.failures {
                0 => Ok(()),
                k => Err(CliError::ChecksFailed(k)),
            }
        }
        Command::Mobius => {
            let text = json_text(&mobius::run(cfg)?);
            write_file(&cfg.out_dir, "mobius.json", &text)?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let (command, overrides) = Cli::parse().into_parts();
    let env_out = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let result = RunConfig::resolve(command, overrides, env_out).and_then(|cfg| execute(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("epsharm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
