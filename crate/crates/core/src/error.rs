use thiserror::Error;

use crate::ldp::MinimizerResult;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. The CLI maps each variant onto a distinct exit
/// code, so failure classes must stay separate.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated a precondition (dimension mismatch, odd nd, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// The requested event admits no admissible pair.
    #[error("infeasible event: {0}")]
    InfeasibleEvent(String),

    /// Brute-force enumeration was asked for more than it can handle.
    #[error("scale guard exceeded: {0}")]
    ScaleGuard(String),

    /// Rejection sampling of a simple graph ran out of attempts.
    #[error("no simple pairing found after {attempts} attempts")]
    RejectionCap { attempts: u64 },

    /// The rate minimizer hit its iteration cap; `best` is the last iterate.
    #[error("minimizer did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: u64,
        residual: f64,
        best: Box<MinimizerResult>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
