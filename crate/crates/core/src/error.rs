use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the recovery toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("entry ({row}, {col}) outside a {rows}x{cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("cannot rescale the zero matrix")]
    ZeroMatrix,

    #[error("starting vector is zero")]
    ZeroVector,

    #[error("{func} is undefined at {value}")]
    Domain { func: &'static str, value: f64 },

    #[error("shifted solve did not converge: shift {shift}, relative residual {residual:e}")]
    SolveFailed { shift: Complex64, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures caused by bad input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidParameter(_)
                | Error::Parse { .. }
                | Error::IndexOutOfRange { .. }
                | Error::Io(_)
                | Error::ZeroMatrix
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub type Result<T> = std::result::Result<T, Error>;
