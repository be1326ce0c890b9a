use thiserror::Error;

use crate::linalg::CMatrix;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed or out-of-range input (shape, finiteness, parameter ranges).
    #[error("input error: {0}")]
    Input(String),

    /// A numerical procedure broke down or could not reach its tolerance.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The element is not in the cone an operation requires.
    #[error("precondition failed: element is not in {cone} (residual {residual:.3e})")]
    NotInCone { cone: &'static str, residual: f64 },

    /// Any other violated precondition; the message names the identity.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Two definitions of the same quantity disagreed beyond tolerance.
    #[error("methods disagree: max deviation {max_deviation:.3e} exceeds {tolerance:.3e} ({detail})")]
    MethodDisagreement {
        max_deviation: f64,
        tolerance: f64,
        detail: String,
        /// Every method's value, labelled by method name.
        candidates: Vec<(String, CMatrix)>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),
}
