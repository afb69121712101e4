use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("sector mismatch: {0}")]
    SectorMismatch(String),
    #[error("beam splitter transmissivity must lie in (0, 1), got {0}")]
    EtaOutOfRange(f64),
    #[error("network error: {0}")]
    Network(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("numerical guard: {0}")]
    Numerical(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
