use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Schema { path: String, line: usize, column: usize, message: String },

    #[error("{field}: {message}")]
    Invalid { field: String, message: String },

    #[error("cannot read {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error("solver error: {0}")]
    Solver(#[from] et_core::Error),

    #[error("cannot write {}: {message}", path.display())]
    Output { path: PathBuf, message: String },
}

impl RunError {
    /// 2 for solver non-convergence, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        use et_core::Error as E;
        match self {
            RunError::Solver(E::NoConvergence { .. } | E::LpStatus { .. } | E::Lp(_)) => 2,
            _ => 1,
        }
    }
}
