use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("numerical degeneracy: {message} (residual {residual:.3e})")]
    NumericalDegeneracy { message: String, residual: f64 },

    #[error("decomposition failed: {0}")]
    DecompositionFailure(String),

    #[error("incomplete data: no measurement covers mode pair ({0}, {1})")]
    IncompleteData(usize, usize),

    #[error("singular readout confusion matrix on qubit {0}")]
    SingularConfusion(usize),

    #[error("empty shot counts")]
    EmptyCounts,

    #[error("postselection discarded all quasiprobability mass")]
    DegeneratePostselection,

    #[error("purification did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("undefined result: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
