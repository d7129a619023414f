use thiserror::Error;

/// Errors raised by the library and mapped onto CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is missing or outside its admissible range.
    #[error("invalid parameter `{field}`: {reason}")]
    Validation { field: String, reason: String },

    /// A function was evaluated outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A dense construction would exceed the configured capacity.
    #[error("capacity exceeded for {what}: requires {required}, cap is {cap}")]
    Capacity { what: String, required: usize, cap: usize },

    /// A root finder, quadrature or linear solve failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: &str, reason: impl Into<String>) -> Self {
        Error::Validation { field: field.to_string(), reason: reason.into() }
    }

    /// Process exit code: 2 for validation-type errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
