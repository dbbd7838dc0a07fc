use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A state, decision or observation does not fit the topology it is used with.
    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("{what} {value} out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        value: u64,
        limit: u64,
    },

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The operational statistics cannot be produced by the model family.
    #[error("infeasible statistics: {0}")]
    InfeasibleStatistics(String),

    #[error("decision {decision:#b} is not feasible in state {state}")]
    InfeasibleDecision { decision: u32, state: u64 },

    #[error("state space exceeds the configured cap of {cap} states")]
    StateSpaceCap { cap: usize },

    #[error("linear program infeasible: {0}")]
    LpInfeasible(String),

    #[error("solver failed: {reason} (residual {residual:e})")]
    SolverFailure { reason: String, residual: f64 },

    /// Closed-loop chain has several recurrent classes; the two states do not communicate.
    #[error("closed-loop chain is not unichain: states {0} and {1} lie in different recurrent classes")]
    MultipleRecurrentClasses(u64, u64),

    #[error("belief update has zero normalizer: observation {0} impossible under predicted belief")]
    BeliefReset(u64),

    #[error("saturation alignment undefined: {0}")]
    AlignmentUndefined(String),

    #[error("frontier comparison undefined: {0}")]
    ComparisonUndefined(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
