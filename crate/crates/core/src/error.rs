use thiserror::Error;

use crate::heuristic::HeuristicTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input data is malformed or violates a documented precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// An operation was called on data that breaks its contract, e.g.
    /// extracting a solution from a non-optimal LP outcome.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The simplex hit its iteration cap or lost numerical footing.
    #[error("solver failure: {0}")]
    Solver(String),

    /// A subproblem of the two-phase loop had no feasible point.
    #[error("subproblem infeasible: {message}")]
    Infeasible {
        message: String,
        trace: Box<HeuristicTrace>,
    },

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
