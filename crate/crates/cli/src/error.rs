use snlab_core::SnError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] SnError),
    #[error("output error: {0}")]
    Output(String),
    /// Some runs of a sweep failed; carries the largest of their exit codes.
    #[error("{failed} of {total} sweep runs failed")]
    Sweep { failed: usize, total: usize, code: i32 },
}

impl CliError {
    /// 2 config, 3 runtime or instability, 4 capacity.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(SnError::Capacity(_)) => 4,
            CliError::Core(SnError::InvalidParameter { .. } | SnError::Domain(_) | SnError::Precondition(_)) => 2,
            CliError::Core(_) | CliError::Output(_) => 3,
            CliError::Sweep { code, .. } => *code,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
