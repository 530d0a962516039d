//! CLI failure classification.
//!
//! Every run ends in one of three ways, mapped to process exit codes:
//!
//! * exit 0 — success;
//! * exit 1 — the run could not be carried out (bad flags or config file,
//!   invalid model parameters, I/O failure, unsupported request);
//! * exit 2 — the run completed but a named verification check failed
//!   (residual gate, identity, market clearing, bound, martingale z-score).
//!
//! The distinction matters for scripting: exit 2 means "the numbers are
//! wrong", not "you called it wrong".

use radner_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration; lists every violation, not just the first.
    Config(Vec<String>),
    /// The run could not be completed (I/O, solver breakdown, unsupported
    /// combination).
    Failure(String),
    /// A named correctness check failed.
    Check { name: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Failure(_) => 1,
            CliError::Check { .. } => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(violations) => {
                write!(f, "invalid configuration:")?;
                for v in violations {
                    write!(f, "\n  - {v}")?;
                }
                Ok(())
            }
            CliError::Failure(msg) => write!(f, "{msg}"),
            CliError::Check { name, message } => write!(f, "check failed [{name}]: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::ResidualExceedsTolerance { ref equation, .. } => CliError::Check {
                name: format!("residual:{equation}"),
                message: e.to_string(),
            },
            CoreError::IdentityViolation { ref name, .. } => CliError::Check {
                name: format!("identity:{name}"),
                message: e.to_string(),
            },
            CoreError::ClearingViolation { .. } => CliError::Check {
                name: "clearing".to_string(),
                message: e.to_string(),
            },
            CoreError::BoundViolation { ref what, .. } => CliError::Check {
                name: format!("bound:{what}"),
                message: e.to_string(),
            },
            CoreError::InvalidParams(list) | CoreError::InvalidIvp(list) => {
                CliError::Config(list)
            }
            other => CliError::Failure(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("i/o error: {e}"))
    }
}
