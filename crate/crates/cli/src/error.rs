use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("config error in {path} at line {line}, column {column}: {message}")]
    ConfigSyntax {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] omt_core::Error),
}

impl CliError {
    /// Process exit status: 2 for configuration and output problems, 3 for
    /// domain or precondition failures, 4 for non-convergence.
    pub fn exit_code(&self) -> i32 {
        use omt_core::Error as E;
        match self {
            CliError::Config(_) | CliError::ConfigSyntax { .. } | CliError::Output { .. } => 2,
            CliError::Core(E::NonConvergence { .. } | E::UnconvergedSteadyState) => 4,
            CliError::Core(_) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
