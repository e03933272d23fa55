use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Algorithm(#[from] subspace_ransac::Error),

    #[error("{count} run(s) hit the iteration cap of {cap}")]
    BudgetExhausted { count: usize, cap: u64 },
}

impl BenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, err: csv::Error) -> Self {
        let path = path.into();
        match err.into_kind() {
            csv::ErrorKind::Io(source) => Self::Io { path, source },
            other => Self::Format {
                path,
                message: format!("{other:?}"),
            },
        }
    }

    /// Process exit code: 2 invalid configuration, 3 iteration budget
    /// exhausted, 4 I/O failure, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        use subspace_ransac::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Algorithm(E::InvalidInput(_) | E::DimensionMismatch { .. }) => 2,
            Self::BudgetExhausted { .. } => 3,
            Self::Algorithm(E::BudgetExhausted { .. } | E::SearchBudget { .. } | E::ExhaustedSampler { .. }) => 3,
            Self::Io { .. } | Self::Format { .. } => 4,
            Self::Algorithm(_) => 1,
        }
    }
}
