use thiserror::Error;

/// Errors raised by the library. Every variant is a caller-side validation
/// failure or a numerical routine that could not deliver its tolerance.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("no non-trivial bound exists for {0}")]
    ImpossibleBound(String),

    #[error("score {score} lies outside the attainable range [{lo}, {hi}]")]
    ScoreOutOfRange { score: f64, lo: f64, hi: f64 },

    #[error("the class is unbounded; no finite score range exists")]
    Unbounded,

    #[error("constraint {0} selects no hypothesis on the grid")]
    InfeasibleConstraint(String),

    #[error("quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    QuadratureNonConvergence { tolerance: f64, estimate: f64 },

    #[error("value {value} lies outside the transform domain [0, {upper}]")]
    OutOfDomain { value: f64, upper: f64 },

    #[error("malformed configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
