use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("infeasible restricted simplex: n = {n}, u_min = {u_min} (need 0 <= u_min and n * u_min <= 1)")]
    InfeasibleSimplex { n: usize, u_min: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(String),
    #[error("idx: wrong magic number {found:#010x}, expected {expected:#010x}")]
    IdxWrongMagic { expected: u32, found: u32 },
    #[error("idx: truncated file (expected {expected} bytes, found {found})")]
    IdxTruncated { expected: usize, found: usize },
    #[error("idx: image count {images} does not match label count {labels}")]
    IdxCountMismatch { images: usize, labels: usize },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
