use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),
    #[error("rank deficiency: {0}")]
    RankDeficient(String),
    #[error("internal consistency error: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
