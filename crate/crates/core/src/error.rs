use thiserror::Error;

/// Errors raised by model construction and the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DamError {
    /// A parameter violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The computation cannot be carried out reliably in floating point.
    #[error("numeric degeneracy: {0}")]
    NumericDegeneracy(String),

    /// The load regime does not match the one the operation applies to.
    #[error("regime error: {0}")]
    Regime(String),
}

impl DamError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        DamError::InvalidArgument(msg.into())
    }

    pub(crate) fn regime(msg: impl Into<String>) -> Self {
        DamError::Regime(msg.into())
    }

    /// True for errors caused by the inputs rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        !matches!(self, DamError::NumericDegeneracy(_))
    }
}

pub type Result<T, E = DamError> = std::result::Result<T, E>;
