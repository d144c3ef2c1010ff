use thiserror::Error;

use crate::evalkit::EvalError;
use crate::hashnet::HashError;
use crate::ingest::IngestError;
use crate::losses::LossError;
use crate::simgraph::GraphError;
use crate::trainer::TrainError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Umbrella error for callers that drive the whole pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl Error {
    /// True when the error stems from malformed input or configuration rather
    /// than from a failure during computation.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Ingest(e) => !matches!(e, IngestError::Io(_)),
            Error::Graph(e) => {
                matches!(e, GraphError::InvalidParameter(_) | GraphError::InsufficientPairs(_) | GraphError::ZeroRow(_))
            }
            Error::Hash(e) => matches!(e, HashError::InvalidParameter(_) | HashError::MalformedCheckpoint(_)),
            Error::Train(e) => matches!(e, TrainError::InvalidConfig(_)),
            Error::Eval(e) => matches!(
                e,
                EvalError::CodeLengthMismatch { .. } | EvalError::GridOutOfRange { .. } | EvalError::EmptyDatabase
            ),
            Error::Loss(_) => false,
        }
    }
}
