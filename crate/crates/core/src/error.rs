use thiserror::Error;

/// Errors raised by parameter validation and the numerical engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be in {expected}, got {value}")]
    OutOfRange {
        name: &'static str,
        expected: &'static str,
        value: f64,
    },

    #[error("x must be non-integer, got {0}")]
    IntegerAmplitude(f64),

    #[error("lambda = 1 is not allowed: the signal would never switch")]
    FrozenSignal,

    #[error(
        "x = {x} is not compatible with the threshold config (floor {floor_x}, bound {bound})"
    )]
    AmplitudeMismatch { x: f64, floor_x: i64, bound: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn out_of_range(name: &'static str, expected: &'static str, value: f64) -> Self {
        Error::OutOfRange {
            name,
            expected,
            value,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
