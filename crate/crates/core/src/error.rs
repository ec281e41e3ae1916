use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{what} {value:?} lies outside its admissible set")]
    OutsideSet { what: &'static str, value: Vec<f64> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("secular equation did not converge after {iterations} iterations (residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("grid of {required} nodes exceeds the budget of {budget}")]
    GridBudget { required: usize, budget: usize },

    #[error("certification lattice of {required} centers exceeds the budget of {budget}")]
    LatticeBudget { required: usize, budget: usize },

    #[error("stage {stage} is out of range for a trajectory of {len} states")]
    StageOutOfRange { stage: usize, len: usize },

    #[error("policy returned {0:?}, which is outside the control set beyond tolerance")]
    PolicyViolation(Vec<f64>),

    #[error("the disturbance set must contain the origin")]
    ZeroDisturbanceMissing,

    #[error("model has no surrogate {0} description")]
    MissingSurrogate(&'static str),

    #[error("Bellman residual grew from {previous:e} to {current:e}, violating the contraction bound")]
    ContractionViolated { previous: f64, current: f64 },

    #[error("{0}")]
    Sampler(String),

    #[error("malformed field container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
