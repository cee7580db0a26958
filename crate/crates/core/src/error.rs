use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration violates one of the model assumptions.
    #[error("validation error: {0}")]
    Validation(String),

    /// A sequence is too short or too long for the requested operation.
    #[error("length error: {0}")]
    Length(String),

    /// Array shapes do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A computation would lose all significant digits.
    #[error("numerical instability: {0}")]
    Instability(String),

    /// Two internal estimators of the same quantity disagree.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    /// A regression was requested on data that cannot be fitted.
    #[error("degenerate fit: {0}")]
    Degenerate(String),

    /// A functional needs a state that was not recorded.
    #[error("missing node: step {0} was not recorded")]
    MissingNode(usize),

    /// A linear solve hit a zero pivot.
    #[error("singular solve: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)+) => {
        if !($cond) {
            return Err($crate::error::Error::$variant(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
