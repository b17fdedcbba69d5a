use std::path::PathBuf;

use spinmem::sequence::SequenceError;
use spinmem::{ConfigError, EngineError, ExperimentError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{source}")]
    Sequence { path: String, source: SequenceError },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("`{0}` is neither a config key nor a `let` name of the sequence")]
    UnknownParam(String),
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("unknown experiment `{0}` (known: {list})", list = spinmem::experiments::EXPERIMENTS.join(", "))]
    UnknownExperiment(String),
    #[error("{0} comparison(s) failed")]
    ComparisonFailed(usize),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Sequence { .. } => 1,
            CliError::Config(_) | CliError::UnknownParam(_) | CliError::Usage(_) | CliError::Read { .. } => 2,
            CliError::Experiment(e) => match e {
                ExperimentError::Sequence(_) => 1,
                ExperimentError::Ensemble(_) | ExperimentError::Config(_) | ExperimentError::Precondition(_) => 2,
                ExperimentError::Engine(_) | ExperimentError::WindowOutsideSignal { .. } => 3,
            },
            CliError::Engine(_) | CliError::Write { .. } => 3,
            CliError::UnknownExperiment(_) => 4,
            CliError::ComparisonFailed(_) => 5,
        }
    }
}
