use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no edges")]
    NoEdges,

    #[error("alpha {alpha} on edge {src} -> {dst} is outside [0, 1]")]
    AlphaOutOfRange { src: String, dst: String, alpha: f64 },

    #[error("duplicate edge {src} -> {dst}")]
    DuplicateEdge { src: String, dst: String },

    #[error("self-loop on node {0}")]
    SelfLoop(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unknown node label {0:?}")]
    UnknownNode(String),

    /// A DMP quantity left the [0, 1] band by more than the round-off allowance.
    #[error("{quantity} = {value} at t = {t} (index {index}) is outside [0, 1]")]
    OutOfRange {
        quantity: &'static str,
        index: usize,
        t: usize,
        value: f64,
    },

    #[error("edge {src} -> {dst} has alpha = 1; the adjoint sweep needs alpha < 1 (try 1 - 1e-9)")]
    UnitAlpha { src: String, dst: String },

    #[error("budget {budget} is infeasible for bounds summing to [{lower}, {upper}]")]
    InfeasibleBudget { budget: f64, lower: f64, upper: f64 },

    #[error("non-finite value encountered at iteration {iteration}: {what}")]
    NonFinite { iteration: usize, what: String },

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("timed out after {0:.1} s")]
    Timeout(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Validation-type failures map to exit status 2 in the CLI, the rest to 1.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::OutOfRange { .. }
                | Error::NonFinite { .. }
                | Error::Timeout(_)
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}
