use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SnError {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Physical parameters violate an invariant.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// A covariance matrix that cannot describe a physical two-mode state.
    #[error("malformed covariance matrix: {0}")]
    MalformedCovariance(String),

    /// Input violates a documented precondition (normalization, grid geometry, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Kernel evaluated at a coincident point.
    #[error("singular kernel: {0}")]
    Singular(String),

    /// Solver configuration cannot produce a stable run.
    #[error("unstable configuration: {0}")]
    Stability(String),

    /// Run aborted at runtime (probability leaked through the boundary, non-finite values).
    #[error("runtime failure: {0}")]
    Runtime(String),

    /// Requested problem exceeds what the chosen representation can hold.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SnError {
    fn from(e: std::io::Error) -> Self {
        SnError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SnError>;
