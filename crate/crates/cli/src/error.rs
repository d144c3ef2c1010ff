use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cimon::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Usage(_) | CliError::Csv { .. } => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

macro_rules! core_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}

core_from!(
    cimon::ingest::IngestError,
    cimon::simgraph::GraphError,
    cimon::hashnet::HashError,
    cimon::trainer::TrainError,
    cimon::evalkit::EvalError
);

#[cfg(test)]
mod tests {
    use super::*;
    use cimon::trainer::TrainError;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(TrainError::InvalidConfig("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(TrainError::NonFiniteLoss { epoch: 0, batch: 0 }).exit_code(), 1);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        let io = CliError::Io { path: "a".into(), source: std::io::Error::other("boom") };
        assert_eq!(io.exit_code(), 1);
    }
}
