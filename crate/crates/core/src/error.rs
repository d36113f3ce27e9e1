use thiserror::Error;

/// Errors raised across the simulator and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid window [{lo}, {hi}]")]
    InvalidWindow { lo: i64, hi: i64 },

    #[error("interval [{a}, {b}] is not contained in [{lo}, {hi}]")]
    OutsideWindow { a: f64, b: f64, lo: i64, hi: i64 },

    #[error("levels not nested: level {level} exceeds level {next} at site {site}")]
    NestingViolated { level: usize, next: usize, site: i64 },

    #[error("window mismatch between configurations")]
    WindowMismatch,

    #[error("{0}")]
    InvalidArgument(String),

    #[error("buffer inadequate: {0}")]
    BufferInadequate(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed result table: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
