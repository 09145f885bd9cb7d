use thiserror::Error;

/// Errors shared across all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no sign change over bracket [{lo}, {hi}]: f(lo) = {flo}, f(hi) = {fhi}")]
    Bracket { lo: f64, hi: f64, flo: f64, fhi: f64 },

    #[error("failed to converge: {0}")]
    Convergence(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("kernel parameterization failed: {0}")]
    Parameterization(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("row {line}: {message}")]
    Row { line: u64, message: String },

    #[error("binning error: {0}")]
    Binning(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("degenerate category: {0}")]
    DegenerateCategory(String),

    #[error("test preconditions violated: {0}")]
    TestPreconditions(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
