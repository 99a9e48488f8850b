//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Inputs that must agree in shape do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The requested bucket holds no rows; callers skip such buckets.
    #[error("bucket ({repetition}, {bucket}) is empty")]
    EmptyBucket { repetition: usize, bucket: usize },

    /// Robust aggregation was asked to summarize nothing.
    #[error("aggregation impossible: no non-empty buckets")]
    EmptyAggregation,

    /// The aggregated covariance plus ridge was not positive definite.
    #[error(
        "indefinite moments: factorization of sigma_hat + lambda*I failed (lambda = {lambda})"
    )]
    IndefiniteMoments { lambda: f64 },

    /// Spectral filtering pruned every bucket.
    #[error("degenerate state: all buckets pruned")]
    DegenerateState,

    /// The design matrix is rank deficient for a least-squares fit.
    #[error("singular design: {0}")]
    SingularDesign(String),

    /// No RANSAC trial produced a consensus set of the required size.
    #[error("ransac consensus failure: no trial reached {required} consensus rows")]
    ConsensusFailure { required: usize },

    /// Every pipeline seed failed.
    #[error("all {attempted} seeds failed; first error: {first}")]
    AllSeedsFailed { attempted: usize, first: String },

    /// Tabular input could not be used.
    #[error("table error in {path}: {reason}")]
    Table { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable tag used in result-table status columns.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::EmptyBucket { .. } => "empty_bucket",
            Error::EmptyAggregation => "empty_aggregation",
            Error::IndefiniteMoments { .. } => "indefinite_moments",
            Error::DegenerateState => "degenerate_state",
            Error::SingularDesign(_) => "singular_design",
            Error::ConsensusFailure { .. } => "consensus_failure",
            Error::AllSeedsFailed { .. } => "all_seeds_failed",
            Error::Table { .. } => "table",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
