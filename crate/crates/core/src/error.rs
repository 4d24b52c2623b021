use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("truncation insufficient: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    TruncationInsufficient { residual: f64, tolerance: f64 },

    #[error("ambient mismatch: {0}")]
    AmbientMismatch(String),

    #[error("degenerate defect: the subspace is contained in the range of the operator")]
    DegenerateDefect,

    #[error("degree overflow: {0}")]
    DegreeOverflow(String),
}

impl Error {
    /// `true` for errors caused by the caller's input rather than by
    /// numerics. The CLI maps these to exit status 2, the rest to 3.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::Precondition(_)
                | Error::AmbientMismatch(_)
                | Error::DegreeOverflow(_)
        )
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
