use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("covariance is not symmetric positive definite: {0:?}")]
    NotSpd([[f64; 2]; 2]),
    #[error("outcome table row {row} is not a distribution (sum {sum})")]
    Unnormalized { row: usize, sum: f64 },
    #[error("empty data set")]
    EmptyData,
    #[error("outcome {0} has no proposal area near its target")]
    DegenerateRegion(String),
    #[error("policy undefined at reachable state {0}")]
    PolicyUndefined(String),
    #[error("block (sA={s_a}, sB={s_b}) did not converge after {iterations} alternations (gap {gap:e})")]
    NoConvergence { s_a: u32, s_b: u32, iterations: usize, gap: f64 },
    #[error("{kind} format version {found} is not supported (expected {expected})")]
    Version { kind: &'static str, found: u32, expected: u32 },
    #[error("artifact kind mismatch: expected {expected}, found {found}")]
    WrongKind { expected: String, found: String },
    #[error("content hash mismatch for {0}")]
    HashMismatch(String),
    #[error("truncated or corrupt file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
