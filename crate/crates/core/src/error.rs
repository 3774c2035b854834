use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sector: n = {n}, m = {m} (need |m| <= n and n + m even)")]
    InvalidSector { n: usize, m: i64 },

    #[error("occupation string is not a member of the sector")]
    NotInSector,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("dimension mismatch: state dim {0}, operator dim {1}")]
    DimensionMismatch(usize, usize),

    #[error("state is not normalized: |norm^2 - 1| = {0:e}")]
    NotNormalized(f64),

    #[error("operation requires the full product basis, not a sector")]
    SectorBasisUnsupported,

    #[error("local dimension {0} unsupported here (prime d required)")]
    UnsupportedLocalDim(u8),

    #[error("observable set violates its contract: {0}")]
    ObservableContract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
