use thiserror::Error;

/// Errors raised by the geometry, differential and topology routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the formula is defined.
    #[error("domain error: {what} = {value} ({expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    NonConverged { estimate: f64, tolerance: f64 },

    /// The Gram matrix of a basis is numerically singular.
    #[error("rank deficient basis: smallest Gram eigenvalue {eigenvalue:e} (largest {largest:e})")]
    RankDeficient { eigenvalue: f64, largest: f64 },

    #[error("principal part must vanish, found b0 = {0}")]
    NonzeroPrincipal(num_complex::Complex64),

    #[error("pole order is undefined for the zero germ")]
    ZeroGerm,

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    /// A pinch move is not valid for the surface it is applied to.
    #[error("invalid pinch move at index {index}: {reason}")]
    InvalidMove { index: usize, reason: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain { what, value, expected }
    }

    /// True for failures of a numerical method as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConverged { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
