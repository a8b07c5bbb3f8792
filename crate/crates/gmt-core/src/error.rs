//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by constructions and estimators.
#[derive(Debug, Error)]
pub enum GmtError {
    /// A precondition on caller-supplied data failed.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// An operation that needs a nonempty set received an empty one.
    #[error("empty input: {0}")]
    Empty(String),
    /// Two cubes have no connecting path in the adjacency graph.
    #[error("no path between the requested cubes (disconnected components)")]
    NoPath,
    /// A set refinement kept less mass than the target; the shell
    /// parameter t was too large and the caller should retry smaller.
    #[error(
        "refinement kept mass ratio {achieved:.6}, below the required {required:.6} \
         (t = {t_used}); retry with a smaller t"
    )]
    RefinementShortfall {
        achieved: f64,
        required: f64,
        t_used: f64,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Shorthand result type used across the crate.
pub type Result<T> = std::result::Result<T, GmtError>;

/// Builds an `InvalidInput` error from format arguments.
#[macro_export]
macro_rules! invalid_input {
    ($($arg:tt)*) => {
        $crate::error::GmtError::InvalidInput(format!($($arg)*))
    };
}
