use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("points span only the zero subspace")]
    DegenerateSpan,

    #[error("iteration budget exhausted after {iterations} iterations")]
    BudgetExhausted { iterations: u64 },

    #[error("sampler exhausted: all {total} subsets already drawn")]
    ExhaustedSampler { total: u128 },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("minimum dependent subset search gave up after {examined} subsets")]
    SearchBudget { examined: u64 },

    #[error("infeasible scene: {0}")]
    InfeasibleScene(String),

    #[error("infeasible partition: {nonzero} points with nonzero degree, need at least {k}")]
    InfeasiblePartition { nonzero: usize, k: usize },

    #[error("scene failed the general-position audit after {attempts} attempts")]
    DegenerateScene { attempts: u32 },

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("expected iteration count is infinite (success probability is zero)")]
    InfiniteExpectation,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
