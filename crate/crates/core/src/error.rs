use thiserror::Error;

/// Errors raised by models, beliefs, estimators and planners.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),
    #[error("model evaluation failed: {0}")]
    ModelEvaluation(String),
    #[error("degenerate posterior: observation has zero likelihood under every particle")]
    DegeneratePosterior,
    #[error("degenerate entropy: zero density product inside a logarithm with nonzero weight")]
    DegenerateEntropy,
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("bounds already converged at level {0}")]
    AlreadyConverged(usize),
    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
