use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("generator index {index} out of range for {total} generators")]
    GeneratorOutOfRange { index: usize, total: usize },
    #[error("mismatched generator counts: {0} vs {1}")]
    GeneratorMismatch(usize, usize),
    #[error("element is not invertible: zero body")]
    NotInvertible,
    #[error("analytic function applied to an element with odd-degree content")]
    OddContent,
    #[error("function undefined at body {0}")]
    UndefinedAtBody(f64),
    #[error("duplicate generator pair {0} in Berezin integration")]
    DuplicatePair(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("degenerate spectrum: {0}")]
    Degenerate(String),
    #[error("interlacing violated: {0}")]
    Interlacing(String),
    #[error("inadmissible chart: {0}")]
    Inadmissible(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("sampler failure: {0}")]
    Sampler(String),
}

pub type Result<T> = std::result::Result<T, Error>;
