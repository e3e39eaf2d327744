use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("index out of supported range: {0}")]
    Range(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("iteration failed to converge: {0}")]
    Convergence(String),

    #[error("degenerate parameter combination: {0}")]
    Degenerate(String),

    #[error("floating point overflow: {0}")]
    Overflow(String),

    #[error("certificate violated: {0}")]
    CertificateViolation(String),

    #[error("empty grid: {0}")]
    EmptyGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
