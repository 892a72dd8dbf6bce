use thiserror::Error;

/// Errors raised by the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("defective eigendecomposition: {what} residual {residual:.3e} exceeds {tolerance:.1e}")]
    Defective {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("integration step underflow: step {step:.3e} for interval {interval:.3e}")]
    StepUnderflow { step: f64, interval: f64 },

    #[error("configuration error:\n{}", format_fields(.0))]
    Config(Vec<FieldError>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerical pipeline (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Decomposition(_) | Error::Defective { .. } | Error::StepUnderflow { .. }
        )
    }
}

/// A single rejected configuration field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

fn format_fields(errs: &[FieldError]) -> String {
    errs.iter()
        .map(|e| format!("  {}: {}", e.field, e.message))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T> = std::result::Result<T, Error>;
