use thiserror::Error;

/// Errors raised by the library. Each variant names the failing condition.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("construction failed: {0}")]
    ConstructionFailure(String),
    #[error("parity error: {0}")]
    Parity(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
    #[error("graph is not bipartite")]
    NotBipartite,
    #[error("graph is not regular (degrees {min}..={max})")]
    NotRegular { min: usize, max: usize },
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("trace has unfinished nodes ({unfinished} of {n})")]
    UnfinishedTrace { unfinished: usize, n: usize },
    #[error("probability overflow at node {node}: total {total}")]
    ProbabilityOverflow { node: usize, total: f64 },
    #[error("not an augmenting path: {0}")]
    NotAugmenting(String),
    #[error("process left its declared bounds: {0}")]
    SpecViolation(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
