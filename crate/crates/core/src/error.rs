use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degree overflow: {left} + {right} exceeds ambient dimension {dim}")]
    DegreeOverflow { left: usize, right: usize, dim: usize },

    #[error("unsupported ambient dimension {0}")]
    UnsupportedDimension(usize),

    #[error("interior product of a 0-form")]
    ZeroDegree,

    #[error("expected {expected} vectors, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("gram form is not positive definite")]
    NotPositiveDefinite,

    #[error("3-form is not positive: associated bilinear form is degenerate or indefinite")]
    NotPositive,

    #[error("matrix is not skew-symmetric (residual {0:.3e})")]
    NotSkew(f64),

    #[error("invalid subspace: {0}")]
    InvalidSubspace(String),

    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),

    #[error("face does not belong to polytope")]
    NotAFace,

    #[error("degree mismatch: valuation has degree {expected}, subspace has dimension {got}")]
    DegreeMismatch { expected: usize, got: usize },

    #[error("invalid valuation: {0}")]
    InvalidValuation(String),

    #[error("group certification failed for {group}: {what} residual {residual:.3e} exceeds {tolerance:.1e}")]
    Certification {
        group: String,
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("degenerate structure: {0}")]
    Degenerate(String),

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
