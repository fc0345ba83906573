use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {reason}", path.display())]
    Parse { path: PathBuf, line: u64, reason: String },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    /// 2 for anything the user can fix in config or data, 3 for internal
    /// solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => 3,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<modsim_core::equilibrium::EquilibriumError> for CliError {
    fn from(e: modsim_core::equilibrium::EquilibriumError) -> Self {
        use modsim_core::equilibrium::EquilibriumError as E;
        match e {
            E::Solver(s) => CliError::Solver(s.to_string()),
            E::InvalidParams(_) | E::InvalidConfig(_) | E::Choice(_) | E::Economics(_) => CliError::Config(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<modsim_core::netgraph::GraphError> for CliError {
    fn from(e: modsim_core::netgraph::GraphError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<modsim_core::solver::SolverError> for CliError {
    fn from(e: modsim_core::solver::SolverError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<modsim_core::bayesopt::BoError> for CliError {
    fn from(e: modsim_core::bayesopt::BoError) -> Self {
        use modsim_core::bayesopt::BoError as E;
        match e {
            E::SingularKernel => CliError::Solver(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<modsim_core::economics::EconomicsError> for CliError {
    fn from(e: modsim_core::economics::EconomicsError) -> Self {
        CliError::Config(e.to_string())
    }
}
