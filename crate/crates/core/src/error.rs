use thiserror::Error;

/// Errors raised by the numerical routines and file parsers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("eigen-solver did not converge after {sweeps} sweeps (off-diagonal {off:e})")]
    Convergence { sweeps: usize, off: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing statistic: {0}")]
    MissingStatistic(String),

    #[error("inconsistent estimates: {0}")]
    Inconsistent(String),

    #[error("infeasible constraint set: {0}")]
    Infeasible(String),

    #[error("no sign change in bracket [{lo}, {hi}] (rates {rate_lo}, {rate_hi})")]
    NoSignChange { lo: f64, hi: f64, rate_lo: f64, rate_hi: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    /// `true` for errors caused by malformed or out-of-range input, as opposed
    /// to mathematically incomplete or infeasible data.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::InvalidParameter(_) | Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
