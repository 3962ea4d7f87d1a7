use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0} of the checks failed")]
    ChecksFailed(usize),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(epsharm::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use epsharm::Error as E;
        match self {
            CliError::ChecksFailed(_) => 1,
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Convergence(_) => 3,
            CliError::Core(E::NoConvergence { .. } | E::LineSearchFailure { .. }) => 3,
            CliError::Core(E::DomainError(_) | E::Singular { .. } | E::InvalidResolution { .. }) => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl From<epsharm::Error> for CliError {
    fn from(e: epsharm::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
