use alloc::string::String;
use core::fmt;

/// Errors raised by the core numerics.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input parameter is outside its admissible range.
    Parameter(String),
    /// Inputs are individually valid but inconsistent with each other.
    Consistency(String),
    /// A point was given outside the reference element it is evaluated on.
    OutsideReference { x: f64, y: f64 },
    /// The kernel was evaluated at coinciding points.
    SingularEvaluation,
    /// The single layer Galerkin matrix is not positive definite. The
    /// boundary has to be rescaled below unit logarithmic capacity.
    Capacity { pivot_index: usize, pivot: f64 },
    /// The system matrix is numerically singular.
    Singular { pivot_index: usize, pivot: f64 },
    /// Matrix or vector dimensions do not agree.
    Dimension { expected: usize, found: usize },
    /// A feature that the solver deliberately does not support.
    Unsupported(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Consistency(msg) => write!(f, "inconsistent input: {msg}"),
            Error::OutsideReference { x, y } => {
                write!(f, "point ({x}, {y}) lies outside the reference element")
            }
            Error::SingularEvaluation => write!(f, "kernel evaluated at coinciding points"),
            Error::Capacity { pivot_index, pivot } => write!(
                f,
                "single layer matrix is not positive definite (pivot {pivot:e} at {pivot_index}); \
                 rescale the boundary so that its diameter is below 1"
            ),
            Error::Singular { pivot_index, pivot } => write!(
                f,
                "system matrix is singular: smallest pivot {pivot:e} at row {pivot_index}"
            ),
            Error::Dimension { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn param(msg: &str) -> Error {
    Error::Parameter(String::from(msg))
}

pub(crate) fn consistency(msg: &str) -> Error {
    Error::Consistency(String::from(msg))
}
