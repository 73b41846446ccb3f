use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("infeasible input: {0}")]
    InfeasibleInput(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("degenerate projection: {0}")]
    DegenerateProjection(String),
    #[error("point {0:?} outside the disk of radius {1}")]
    OutOfDomain([f64; 2], f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
