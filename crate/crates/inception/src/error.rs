use std::path::PathBuf;

use inception_core::circuit::CircuitError;
use inception_core::data::DataError;
use inception_core::engine::EngineError;
use inception_core::train::TrainError;
use inception_core::transform::TransformError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{what}: {message}")]
    Format { what: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(what: impl Into<String>, message: impl ToString) -> Self {
        Error::Format { what: what.into(), message: message.to_string() }
    }

    /// Whether the error comes from bad input (files, flags, configs) rather
    /// than a failure while running.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Format { .. } | Error::Invalid(_) | Error::Circuit(_) | Error::Transform(_) | Error::Data(_) => true,
            Error::Engine(e) => matches!(
                e,
                EngineError::Config(_)
                    | EngineError::Shape { .. }
                    | EngineError::RowLength { .. }
                    | EngineError::Value { .. }
                    | EngineError::ParamCount { .. }
            ),
            Error::Train(e) => matches!(e, TrainError::Config(_) | TrainError::EmptyData | TrainError::EmptyValidation { .. }),
            Error::Io { .. } => false,
        }
    }
}
