//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the learner, its oracles and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Rejection sampling exhausted its attempt budget without landing in the band.
    #[error("band too thin: no sample with |<w,x>| <= {bandwidth} after {attempts} draws")]
    BandTooThin { bandwidth: f64, attempts: u64 },

    /// The requested operation has no meaning for this configuration.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An inner numerical solver stopped at its iteration cap.
    #[error("solver did not converge after {iterations} iterations (residual {residual:e}, infeasibility {infeasibility:e})")]
    Numerical {
        iterations: usize,
        residual: f64,
        infeasibility: f64,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
