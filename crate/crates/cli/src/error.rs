use thiserror::Error;

/// Failure of a run, each kind with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("diagnostics failure: {0}")]
    Diagnostics(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Diagnostics(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Output(_) => 1,
        }
    }
}

impl From<mece::Error> for CliError {
    fn from(e: mece::Error) -> Self {
        if e.is_solver_failure() {
            CliError::Solver(e.to_string())
        } else if e.is_assumption_failure() {
            CliError::Diagnostics(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}
