use thiserror::Error;

/// Errors raised by the library.
///
/// `InfiniteDivergence` and `InfiniteFisher` are signals rather than failures:
/// they report that a support condition does not hold and the quantity is
/// `+∞`.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("divergence is infinite: {0}")]
    InfiniteDivergence(String),

    #[error("Fisher information is infinite: {0}")]
    InfiniteFisher(String),

    #[error("point lies outside the parameter box: {0}")]
    OutOfBox(String),

    #[error("condition violated: {0}")]
    ConditionViolated(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    FamilyFile { line: usize, message: String },

    #[error("computation too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for the `+∞` signals.
    pub fn is_infinite_signal(&self) -> bool {
        matches!(self, Error::InfiniteDivergence(_) | Error::InfiniteFisher(_))
    }
}
