use thiserror::Error;

/// Errors raised by constructions, metrics and simulations in this crate.
#[derive(Debug, Error)]
pub enum DesignError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("resource bound exceeded: {0}")]
    ResourceBound(String),

    #[error("group closure exceeded {limit} elements")]
    GroupOverflow { limit: usize },

    #[error("construction failure: {0}")]
    ConstructionFailure(String),

    #[error("every state was annihilated by the projector")]
    EmptyEnsemble,

    #[error("orbit is not a 1-design: completeness residual {residual:e}")]
    NotA1Design { residual: f64 },

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("serialization: {0}")]
    Serialization(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DesignError>;
