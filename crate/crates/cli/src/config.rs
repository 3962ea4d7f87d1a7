//! Run configuration: built-in defaults, then a flat `key = value` file,
//! then command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, CliResult};

pub const OUT_DIR_ENV: &str = "EPSHARM_OUT_DIR";

const KNOWN_KEYS: &[&str] = &[
    "n",
    "eps",
    "modes",
    "eps_min",
    "eps_max",
    "steps",
    "spacing",
    "kmax",
    "matrix",
    "grid_polar",
    "grid_azimuthal",
    "radial_nodes",
    "tol",
    "grad_tol",
    "seed",
    "out_dir",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Minimize,
    Sweep,
    Spectral,
    Mobius,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
}

impl FromStr for Spacing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "log" => Ok(Spacing::Log),
            "linear" => Ok(Spacing::Linear),
            _ => Err(format!("unknown spacing {s:?}, expected log or linear")),
        }
    }
}

/// Values given on the command line; `None` defers to the file or default.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub n: Option<i64>,
    pub eps: Option<f64>,
    pub modes: Option<usize>,
    pub eps_min: Option<f64>,
    pub eps_max: Option<f64>,
    pub steps: Option<usize>,
    pub spacing: Option<Spacing>,
    pub kmax: Option<u32>,
    pub matrix: Option<String>,
    pub grid_polar: Option<usize>,
    pub grid_azimuthal: Option<usize>,
    pub radial_nodes: Option<usize>,
    pub tol: Option<f64>,
    pub grad_tol: Option<f64>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub n: i64,
    pub epsilon: f64,
    pub modes: usize,
    pub eps_min: f64,
    pub eps_max: f64,
    pub steps: usize,
    pub spacing: Spacing,
    pub kmax: u32,
    pub matrix: Option<[f64; 8]>,
    pub grid_polar: usize,
    pub grid_azimuthal: usize,
    pub radial_nodes: usize,
    /// Acceptance tolerance of the checks.
    pub tol: f64,
    /// Gradient sup-norm the minimizer must reach.
    pub grad_tol: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// Parses `key = value` lines; `#` starts a comment, dashes in keys read as
/// underscores. Later lines win.
pub fn parse_config_text(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config(format!("line {}: expected key = value, got {raw:?}", i + 1)));
        };
        let key = k.trim().replace('-', "_");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("line {}: unknown key {key:?}", i + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn read_config_file(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config_text(&text)
}

struct Layers {
    file: BTreeMap<String, String>,
}

impl Layers {
    fn pick<T>(&self, key: &str, flag: Option<T>, default: T) -> CliResult<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(s) => s.parse().map_err(|e| CliError::Config(format!("bad value {s:?} for {key}: {e}"))),
            None => Ok(default),
        }
    }
}

pub fn parse_matrix(s: &str) -> CliResult<[f64; 8]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 8 {
        return Err(CliError::Config(format!("matrix needs eight comma-separated reals, got {}", parts.len())));
    }
    let mut out = [0.0; 8];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse::<f64>().map_err(|e| CliError::Config(format!("bad matrix entry {p:?}: {e}")))?;
        if !o.is_finite() {
            return Err(CliError::Config(format!("matrix entry {p:?} is not finite")));
        }
    }
    Ok(out)
}

impl RunConfig {
    /// Merges defaults, the optional config file and the flags, then
    /// validates what `command` needs. `env_out_dir` is the value of
    /// [`OUT_DIR_ENV`], consulted when neither flag nor file names a directory.
    pub fn resolve(command: Command, o: Overrides, env_out_dir: Option<PathBuf>) -> CliResult<Self> {
        let file = match &o.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        let l = Layers { file };
        let matrix = match o.matrix.or_else(|| l.file.get("matrix").cloned()) {
            Some(s) => Some(parse_matrix(&s)?),
            None => None,
        };
        let out_dir = o
            .out_dir
            .or_else(|| l.file.get("out_dir").map(PathBuf::from))
            .or(env_out_dir)
            .unwrap_or_else(|| PathBuf::from("."));
        let cfg = RunConfig {
            command,
            n: l.pick("n", o.n, 2)?,
            epsilon: l.pick("eps", o.eps, 0.01)?,
            modes: l.pick("modes", o.modes, epsharm::symmetric::DEFAULT_MODES)?,
            eps_min: l.pick("eps_min", o.eps_min, 0.0025)?,
            eps_max: l.pick("eps_max", o.eps_max, 0.04)?,
            steps: l.pick("steps", o.steps, 3)?,
            spacing: l.pick("spacing", o.spacing, Spacing::Log)?,
            kmax: l.pick("kmax", o.kmax, 4)?,
            matrix,
            grid_polar: l.pick("grid_polar", o.grid_polar, 64)?,
            grid_azimuthal: l.pick("grid_azimuthal", o.grid_azimuthal, 128)?,
            radial_nodes: l.pick("radial_nodes", o.radial_nodes, epsharm::symmetric::DEFAULT_RADIAL_NODES)?,
            tol: l.pick("tol", o.tol, 1e-6)?,
            grad_tol: l.pick("grad_tol", o.grad_tol, 1e-8)?,
            seed: l.pick("seed", o.seed, 0)?,
            out_dir,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.tol > 0.0) || !(self.grad_tol > 0.0) {
            return bad(format!("tolerances must be positive, got tol={} grad_tol={}", self.tol, self.grad_tol));
        }
        if self.grid_polar < 2 || self.grid_azimuthal < 4 {
            return bad(format!(
                "grid ({}, {}) too small: need grid_polar >= 2 and grid_azimuthal >= 4",
                self.grid_polar, self.grid_azimuthal
            ));
        }
        let in_range = |e: f64| e > 0.0 && e < 0.25;
        match self.command {
            Command::Minimize => {
                if !in_range(self.epsilon) {
                    return bad(format!("eps must lie in (0, 0.25), got {}", self.epsilon));
                }
                if self.n < 0 {
                    return bad(format!("n must be nonnegative, got {}", self.n));
                }
                if self.modes < 4 {
                    return bad(format!("modes must be at least 4, got {}", self.modes));
                }
                if self.radial_nodes < 2 {
                    return bad(format!("radial_nodes must be at least 2, got {}", self.radial_nodes));
                }
            }
            Command::Sweep => {
                if !in_range(self.eps_min) || !in_range(self.eps_max) {
                    return bad(format!("eps range [{}, {}] must lie in (0, 0.25)", self.eps_min, self.eps_max));
                }
                if self.steps == 0 || self.eps_min > self.eps_max {
                    return bad(format!(
                        "empty eps range: [{}, {}] with {} steps",
                        self.eps_min, self.eps_max, self.steps
                    ));
                }
                if self.steps == 1 && self.eps_min != self.eps_max {
                    return bad("a range with distinct ends needs at least two steps".into());
                }
                if self.modes < 4 || self.radial_nodes < 2 {
                    return bad(format!(
                        "need modes >= 4 and radial_nodes >= 2, got {} and {}",
                        self.modes, self.radial_nodes
                    ));
                }
            }
            Command::Spectral => {
                if !(1..=epsharm::spectral::DEFAULT_K_MAX).contains(&self.kmax) {
                    return bad(format!(
                        "kmax must lie in 1..={}, got {}",
                        epsharm::spectral::DEFAULT_K_MAX,
                        self.kmax
                    ));
                }
            }
            Command::Mobius => {
                if self.matrix.is_none() {
                    return bad("mobius needs --matrix a_re,a_im,b_re,b_im,c_re,c_im,d_re,d_im".into());
                }
            }
            Command::Verify => {}
        }
        Ok(())
    }

    /// The ε values of a sweep, ascending.
    pub fn sweep_values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.eps_min];
        }
        let last = (self.steps - 1) as f64;
        let mut v: Vec<f64> = (0..self.steps)
            .map(|i| {
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Log => (self.eps_min.ln() + t * (self.eps_max / self.eps_min).ln()).exp(),
                    Spacing::Linear => self.eps_min + t * (self.eps_max - self.eps_min),
                }
            })
            .collect();
        // Pin the ends exactly.
        v[0] = self.eps_min;
        v[self.steps - 1] = self.eps_max;
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(command: Command, o: Overrides) -> CliResult<RunConfig> {
        RunConfig::resolve(command, o, None)
    }

    #[test]
    fn file_values_are_overridden_by_flags() {
        let dir = std::env::temp_dir().join(format!("epsharm-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "# minimize settings\neps = 0.02\nmodes=12\nseed = 7  # trailing\n").unwrap();
        let o = Overrides { config: Some(path), eps: Some(0.03), ..Default::default() };
        let cfg = resolve(Command::Minimize, o).unwrap();
        assert_eq!(cfg.epsilon, 0.03);
        assert_eq!(cfg.modes, 12);
        assert_eq!(cfg.seed, 7);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn unknown_keys_and_malformed_lines_are_rejected() {
        assert!(parse_config_text("colour = red").is_err());
        assert!(parse_config_text("eps 0.1").is_err());
        assert_eq!(parse_config_text("grid-polar = 8").unwrap()["grid_polar"], "8");
    }

    #[test]
    fn epsilon_range_is_guarded() {
        let o = Overrides { eps: Some(0.3), ..Default::default() };
        assert!(matches!(resolve(Command::Minimize, o), Err(CliError::Config(_))));
        let o = Overrides { eps: Some(0.3), ..Default::default() };
        assert!(resolve(Command::Verify, o).is_ok());
    }

    #[test]
    fn empty_sweep_range_is_a_config_error() {
        let o = Overrides { eps_min: Some(0.04), eps_max: Some(0.01), ..Default::default() };
        assert!(matches!(resolve(Command::Sweep, o), Err(CliError::Config(_))));
        let o = Overrides { steps: Some(0), ..Default::default() };
        assert!(matches!(resolve(Command::Sweep, o), Err(CliError::Config(_))));
    }

    #[test]
    fn log_sweep_hits_the_quarter_steps() {
        let cfg = resolve(Command::Sweep, Overrides::default()).unwrap();
        let v = cfg.sweep_values();
        assert_eq!(v.len(), 3);
        assert_eq!(v[0], 0.0025);
        assert!((v[1] - 0.01).abs() < 1e-15);
        assert_eq!(v[2], 0.04);
    }

    #[test]
    fn out_dir_precedence() {
        let env = Some(PathBuf::from("/env"));
        let cfg = RunConfig::resolve(Command::Verify, Overrides::default(), env.clone()).unwrap();
        assert_eq!(cfg.out_dir, PathBuf::from("/env"));
        let o = Overrides { out_dir: Some("/flag".into()), ..Default::default() };
        assert_eq!(RunConfig::resolve(Command::Verify, o, env).unwrap().out_dir, PathBuf::from("/flag"));
    }

    #[test]
    fn matrix_parsing() {
        assert_eq!(parse_matrix("2,0,0,0,0,0,0.5,0").unwrap()[6], 0.5);
        assert!(parse_matrix("1,2,3").is_err());
        assert!(parse_matrix("1,0,0,0,0,0,x,0").is_err());
        let o = Overrides::default();
        assert!(matches!(resolve(Command::Mobius, o), Err(CliError::Config(_))));
    }
}
