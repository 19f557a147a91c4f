use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{qubits} qubits exceeds the cap of {cap}")]
    SizeCap { qubits: usize, cap: usize },

    #[error("m + l = {total} exceeds the binomial guard of {guard}")]
    BinomialGuard { total: usize, guard: usize },

    #[error("eigenvalue index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("matrix dimension {found} does not match expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("posterior grid size {0} is below the minimum of 16")]
    GridSize(usize),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("csv parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
