use thiserror::Error;

/// Errors produced by model construction, space construction and the
/// operator/evolution machinery.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("inconsistent gram data: {0}")]
    InconsistentGram(String),

    #[error("degenerate generator: {0}")]
    DegenerateGenerator(String),

    #[error("degenerate projection: {0}")]
    DegenerateProjection(String),

    #[error("singular resolvent at lambda = {lambda}: a-bar = {a_bar:.6e}")]
    SingularResolvent { lambda: f64, a_bar: f64 },

    #[error("ill-conditioned construction: {0}")]
    IllConditioned(String),

    #[error("numeric overflow: {0}")]
    NumericOverflow(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
