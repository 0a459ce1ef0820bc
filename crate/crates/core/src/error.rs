use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point {0} lies outside the bulk window")]
    OutsideBulk(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("sampler fault: {0}")]
    SamplerFault(String),
    #[error("unreachable kappa cell ({0}, {1})")]
    UnreachableKappa(usize, usize),
}

pub type Result<T> = std::result::Result<T, Error>;
