use thiserror::Error;

/// Errors emitted by oracles, operators, and constructors.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// A component oracle was evaluated outside its domain or produced a
    /// non-finite value. Carries the offending component index.
    #[error("domain violation in component {index}: {message}")]
    DomainViolation { index: usize, message: String },

    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported dimension {dim}, this operation handles d <= {max}")]
    UnsupportedDimension { dim: usize, max: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CoreError {
    fn from(e: std::io::Error) -> Self {
        CoreError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
