use thiserror::Error;

use crate::cake::ExactScalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CakeError {
    #[error("invalid valuation: {0}")]
    InvalidValuation(String),
    #[error("cut target {tau} outside [0, {available}]")]
    TauOutOfRange {
        tau: ExactScalar,
        available: ExactScalar,
    },
    #[error("bad eval range [{x}, {y}]")]
    BadRange { x: ExactScalar, y: ExactScalar },
    #[error("no point right of {x} reaches value {tau}")]
    Unsatisfiable { x: ExactScalar, tau: ExactScalar },
    #[error("asked for {m} pieces out of {available}")]
    MTooLarge { m: usize, available: usize },
    #[error("procedure needs at least one piece")]
    EmptyInput,
    #[error("agent {agent} out of range for {n} agents")]
    UnknownAgent { agent: usize, n: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("graph is not a line")]
    NotALine,
    #[error("wrong instance shape: {0}")]
    WrongShape(String),
    #[error("allocation is not a partition: {0}")]
    IncompleteAllocation(String),
    #[error("bad generator parameters: {0}")]
    BadShapeParams(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

pub type CakeResult<T> = Result<T, CakeError>;
