use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mode index {mode} out of range for a {n_modes}-mode state")]
    ModeOutOfRange { mode: usize, n_modes: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cannot condition on a quadrature with variance {0:e}")]
    DegenerateConditioning(f64),

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("state is not physical (smallest symplectic eigenvalue {0})")]
    NonPhysical(f64),

    #[error("eigensolver did not converge")]
    EigenNonConvergence,

    #[error("signal-to-noise ratio undefined: both input quadrature means are zero")]
    UndefinedSnr,

    #[error("channel map undefined: {0}")]
    ChannelMap(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("no trials were accepted by the post-selection filter")]
    NoAcceptedTrials,

    #[error("quadrature did not converge (error estimate {0:e})")]
    QuadratureNonConvergence(f64),

    #[error("numerical overflow: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
