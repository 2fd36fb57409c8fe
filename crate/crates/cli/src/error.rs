use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },

    #[error("numerical failure: {0}")]
    Numerical(#[from] qcwalk_core::Error),
}

impl CliError {
    /// 1 for anything the user can fix in the invocation, 2 when the
    /// computation itself failed.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Numerical(_) => 2,
        }
    }
}
