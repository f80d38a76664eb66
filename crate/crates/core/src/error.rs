use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dense size guard exceeded: {what} needs {needed} entries per axis, limit is {limit}")]
    Resource {
        what: String,
        needed: u128,
        limit: u128,
    },

    #[error("input vector is not normalized (norm = {norm})")]
    Normalization { norm: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("operator is not invariant under the transposition of copies {0} and {1} (residual {2:e})")]
    NotPermutationInvariant(usize, usize, f64),

    #[error("semidefinite solver did not converge: {0}")]
    SolverFailure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invariant violated: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 1 for violated bounds or invariants, 2 for bad
    /// usage or input, 3 for size guards.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource { .. } => 3,
            Error::InvalidDimension(_) | Error::Argument(_) | Error::DimensionMismatch(_) | Error::Parse(_) => 2,
            _ => 1,
        }
    }
}
