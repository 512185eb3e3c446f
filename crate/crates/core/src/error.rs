use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular matrix: pivot magnitude {pivot:e} below threshold")]
    SingularMatrix { pivot: f64 },

    #[error("matrix is not positive definite: pivot {pivot:e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("degenerate embedding for item {item}: norm {norm:e}")]
    DegenerateEmbedding { item: usize, norm: f64 },

    #[error("quadratic program is infeasible (phase-one residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("active-set solver hit the iteration cap ({iterations})")]
    MaxIterations { iterations: usize },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("KKT system with frozen active set is singular")]
    SingularKkt,

    #[error("surrogate feasible set is empty")]
    EmptyFeasibleSet,

    #[error("bad dimensions: {0}")]
    BadDimensions(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("invalid inputs: {0}")]
    InvalidInputs(String),

    #[error("empty split: {0}")]
    EmptySplit(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("instance {index}: {source}")]
    Instance {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    /// Attach the index of the training/evaluation instance that failed.
    pub fn at_instance(self, index: usize) -> Self {
        Error::Instance {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
