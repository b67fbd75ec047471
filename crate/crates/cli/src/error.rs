use std::fmt;

/// Failure classes, each with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed config, unknown key, impossible parameters. Exit code 2.
    Invalid(String),
    /// A verification check did not hold. Exit code 1.
    CheckFailed(String),
    /// Solver or numerical failure at run time. Exit code 1.
    Runtime(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::CheckFailed(_) | CliError::Runtime(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<secmimo::Error> for CliError {
    fn from(e: secmimo::Error) -> Self {
        use secmimo::Error as E;
        match e {
            E::Convergence { .. } | E::DegenerateEstimate { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
