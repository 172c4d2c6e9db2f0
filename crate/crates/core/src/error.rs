use num_rational::BigRational;
use thiserror::Error;

use crate::coupling::CouplingFailure;
use crate::martingale::IntervalViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("atom masses sum to {total}, expected exactly 1")]
    MassNotOne { total: BigRational },
    #[error("atom {point} has negative mass {mass}")]
    NegativeMass { point: String, mass: BigRational },
    #[error("bitstring {point:?} has width {got}, expected {expected}")]
    BadWidth {
        point: String,
        expected: usize,
        got: usize,
    },
    #[error("dimension mismatch: expected {expected} variables, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("conditioning event has probability zero")]
    ZeroProbabilityEvent,
    #[error("subset must be nonempty")]
    EmptySubset,
    #[error("conditioning event of the family has probability zero")]
    EmptyConditioningEvent,
    #[error("{what}: n = {n} exceeds the enumeration cap {cap} (set NEGDEP_MAX_N to override)")]
    TooLarge {
        what: &'static str,
        n: usize,
        cap: usize,
    },
    #[error("invalid variable index {index} for n = {n}")]
    InvalidIndex { index: usize, n: usize },
    #[error("variable {0} is assigned twice")]
    DuplicateIndex(usize),
    #[error("test function is not 1-Lipschitz: flipping bit {bit} at {point} changes the value by {change}")]
    NotLipschitz {
        point: String,
        bit: usize,
        change: BigRational,
    },
    #[error("test function is declared monotone but decreases from {from} to {to}")]
    NotMonotone { from: String, to: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot parse {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error("no eligible index at a node with positive probability (invalid measure or bug)")]
    NoEligibleIndex,
    #[error("variance identity violated: {0}")]
    LemmaViolated(String),
    #[error("martingale step interval exceeds its bound: {0}")]
    IntervalViolation(Box<IntervalViolation>),
    #[error("no coupling exists: {0}")]
    DominanceFails(Box<CouplingFailure>),
    #[error("node has fewer than two live branches")]
    NodeIsLeaf,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            input: input.to_string(),
            reason: reason.into(),
        }
    }
}
