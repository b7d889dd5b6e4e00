use thiserror::Error;

/// Errors produced by the link simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("beta = 0 has no realisable shaping filter (the impulse response is a Dirac delta); use the rectangular pulse directly")]
    DegenerateFilter,

    #[error("numerical integration failed to converge: achieved error {achieved:e} > tolerance {tolerance:e}")]
    NumericalFailure { achieved: f64, tolerance: f64 },

    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("enumeration of {required} vectors exceeds the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u64 },

    #[error("requested {requested} symbol blocks but only {available} square-law classes exist")]
    TooManyBlocks { requested: usize, available: usize },

    #[error("interval [{start:e}, {end:e}] s lies outside the sampled field [{field_start:e}, {field_end:e}] s")]
    OutOfBounds {
        start: f64,
        end: f64,
        field_start: f64,
        field_end: f64,
    },

    #[error("grid too short for dispersion: {edge_fraction:e} of the field energy sits at the grid edge")]
    Aliasing { edge_fraction: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("likelihood variance for coordinate {coordinate} of block {block} is not positive")]
    NonPositiveVariance { block: usize, coordinate: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
