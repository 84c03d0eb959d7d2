use std::fmt;

use thiserror::Error;

/// Identifies the random substream that produced a channel draw, so a failing
/// draw can be regenerated in isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub seed: u64,
    pub trial: u64,
}

impl fmt::Display for StreamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "seed={} trial={}", self.seed, self.trial)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The closed form is not valid for the requested configuration.
    #[error("validity error: {0}")]
    Validity(String),

    /// The requested rate is at or above the high-SNR capacity, so no finite
    /// blocklength achieves it.
    #[error("infeasible rate: target {target} is not below capacity m*log2(1+rho) = {capacity}")]
    InfeasibleRate { target: f64, capacity: f64 },

    #[error("Hermitian eigensolver did not converge ({lineage})")]
    NoConvergence { lineage: StreamId },

    #[error("eigenvalue {value:e} is negative beyond round-off (lambda_max = {lambda_max:e}, {lineage})")]
    NegativeEigenvalue {
        value: f64,
        lambda_max: f64,
        lineage: StreamId,
    },

    /// Two estimates that cannot be combined.
    #[error("contract error: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;
