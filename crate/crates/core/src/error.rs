use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index ({row}, {col}) out of range for dimension {dim}")]
    IndexOutOfRange { row: usize, col: usize, dim: usize },

    #[error("{what} exceeds the dense budget: {size} > {limit}")]
    TooLarge { what: &'static str, size: usize, limit: usize },

    #[error("eigensolver did not converge")]
    EigenNonConvergence,

    #[error("block-encoded element has modulus {0} > 1; normalization constant too small")]
    InvalidNormalization(f64),

    #[error("filter does not separate the ground state: transformed ground energy {0} >= -1")]
    NotSeparated(f64),

    #[error("iterate norm collapsed below floor ({norm_sq:e} < {floor:e}); step size too large")]
    NormUnderflow { norm_sq: f64, floor: f64 },

    #[error("iterate diverged at iteration {0}")]
    Diverged(usize),

    #[error("Chebyshev degree {0} exceeds exact monomial expansion limit of 20")]
    DegreeTooLarge(usize),

    #[error("config: {0}")]
    Config(String),

    #[error("unknown check suite `{name}`; available: {available}")]
    UnknownSuite { name: String, available: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
