use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid edge ({i}, {j}) for a graph on {n} nodes")]
    InvalidEdge { n: usize, i: usize, j: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("measurement matrix not full row rank (rank {rank} < {rows} rows)")]
    RankDeficient { rank: usize, rows: usize },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("edge {edge} is not free: perturbing it is visible in the output ({reason})")]
    NotFree { edge: usize, reason: String },

    #[error("state diverged at t = {time} (|x| > {threshold})")]
    Divergence { time: f64, threshold: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
