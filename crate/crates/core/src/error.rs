use thiserror::Error;

use crate::rational::Q;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("interval [{lo}, {hi}] is not inside [0, 1]")]
    BadInterval { lo: Box<Q>, hi: Box<Q> },
    #[error("invalid step density: {0}")]
    InvalidDensity(String),
    #[error("valuation of agent {agent} sums to {total}, expected 1")]
    NotNormalized { agent: usize, total: Q },
    #[error("cut target {target} exceeds the interval value {available}")]
    CutOutOfRange { target: Box<Q>, available: Box<Q> },
    #[error("threshold {0} is out of range")]
    ThresholdOutOfRange(Q),
    #[error("agent set is empty")]
    EmptyAgentSet,
    #[error("unknown agent index {0}")]
    UnknownAgent(usize),
    #[error("subcake is empty or disconnected")]
    BadSubcake,
    #[error("root is not a point of the subcake")]
    RootNotInSubcake,
    #[error("graph is not a star: {0}")]
    NotAStar(String),
    #[error("graph is not a tree")]
    NotATree,
    #[error("valuations are not identical")]
    NotIdentical,
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(Q),
    #[error("size cap exceeded: {0}")]
    SizeCap(String),
    #[error("balance call limit {0} exceeded")]
    CallLimit(u64),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(condition: bool, message: impl FnOnce() -> String) -> Result<()> {
    if condition {
        Ok(())
    } else {
        Err(Error::Invariant(message()))
    }
}
