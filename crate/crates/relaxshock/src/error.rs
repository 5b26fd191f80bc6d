//! Error type shared across the crate, with process exit codes for the CLI.

use thiserror::Error;

/// Failure modes of the laboratory.
#[derive(Debug, Error)]
pub enum RelaxError {
    /// Configuration file missing, malformed, or violating a precondition.
    #[error("config error: {0}")]
    Config(String),

    /// Model or shock parameters violate an admissibility constraint.
    #[error("admissibility error: {0}")]
    Admissibility(String),

    /// The stiff profile-ODE denominator left its guaranteed-positive range.
    #[error("stiffness error: {0}")]
    Stiffness(String),

    /// Non-finite value or non-positive specific volume during time stepping.
    #[error("solution blew up at t={t}: {what}")]
    BlowUp { t: f64, what: String },

    /// A validation suite check failed.
    #[error("validation failure: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RelaxError {
    /// Process exit code for the CLI: 0 success, 2 config/admissibility,
    /// 3 runtime blow-up, 4 validation failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RelaxError::Config(_) | RelaxError::Admissibility(_) => 2,
            RelaxError::Stiffness(_) | RelaxError::BlowUp { .. } => 3,
            RelaxError::Validation(_) => 4,
            RelaxError::Io(_) => 3,
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, RelaxError>;
