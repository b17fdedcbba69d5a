use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("n_spins must be at least 1")]
    NoSpins,
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid relaxation parameters: {0}")]
    Relaxation(String),
    #[error("invalid constants: {0}")]
    Constants(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("event {index}: {reason}")]
    InvalidEvent { index: usize, reason: String },
    #[error("{0}")]
    InvalidArgument(String),
}

impl EngineError {
    pub(crate) fn at(self, index: usize) -> Self {
        match self {
            EngineError::InvalidArgument(reason) => EngineError::InvalidEvent { index, reason },
            other => other,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Sequence(#[from] crate::sequence::SequenceError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("echo window [{start_us:.3}, {end_us:.3}] us lies outside the acquired signal")]
    WindowOutsideSignal { start_us: f64, end_us: f64 },
    #[error("{0}")]
    Precondition(String),
}
