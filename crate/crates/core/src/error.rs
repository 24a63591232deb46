use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Mittag-Leffler evaluation could not certify its error bound.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("point {t} lies outside [{a}, {b}]")]
    OutOfRange { t: f64, a: f64, b: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (max-norm residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Newton system (condition estimate {condition:e})")]
    Singular { condition: f64 },

    /// Integration produced a non-finite state; `t` is the last time with a finite state.
    #[error("non-finite state after t = {t}")]
    Blowup { t: f64 },

    #[error("rank-deficient least-squares problem: {0}")]
    RankDeficient(String),

    #[error("inspection window too short: {0}")]
    WindowTooShort(String),

    #[error("attractor mismatch: {0}")]
    AttractorMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
