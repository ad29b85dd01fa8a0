use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("mps line {line}: {msg}")]
    Mps { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
