use thiserror::Error;

use crate::solver::IterationRecord;

/// Errors raised by the solver and its building blocks.
#[derive(Debug, Error)]
pub enum ArqError {
    /// A caller passed arguments outside an operation's domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A solver configuration violates one of its interval constraints.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An inner subsolver could not meet its termination test.
    #[error("subsolver stalled: {0}")]
    SolverStall(String),

    /// The outer iteration budget ran out before certification.
    #[error("iteration budget of {max_iters} exhausted without certification")]
    BudgetExhausted {
        max_iters: usize,
        trace: Box<Vec<IterationRecord>>,
    },

    /// A property that the convergence theory guarantees was observed to fail.
    /// This signals a bug, not a hard problem instance.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, ArqError>;

pub(crate) fn invalid(msg: impl Into<String>) -> ArqError {
    ArqError::InvalidArgument(msg.into())
}
