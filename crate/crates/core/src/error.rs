use thiserror::Error;

/// Errors raised anywhere in the simulator, model and training stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpqcError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    Index { index: usize, num_qubits: usize },

    #[error("invalid control specification: {0}")]
    Control(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("post-selection impossible: success probability {probability:e}")]
    PostSelectionImpossible { probability: f64 },

    #[error("state error: {0}")]
    State(String),

    #[error("forward pass failed at x = {x:?}: {reason}")]
    Forward { x: Vec<f64>, reason: String },

    #[error("estimation impossible: {0}")]
    EstimationImpossible(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SpqcError {
    fn from(err: std::io::Error) -> Self {
        SpqcError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SpqcError>;
