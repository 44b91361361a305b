use thiserror::Error;

use crate::solution::Violation;

/// Errors raised by the clustering pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("weight {0:?} is not on the probability simplex")]
    NotSimplex(Vec<f64>),

    #[error("need at least {needed} policies, got {got}")]
    TooFewPolicies { needed: usize, got: usize },

    #[error("only {0} Pareto-optimal policies found; use a finer weight lattice")]
    TooFewParetoPolicies(usize),

    #[error("invalid partitioning: {0:?}")]
    InvalidPartitioning(Vec<Violation>),

    #[error("duplicate policy id `{0}`")]
    DuplicateId(String),

    #[error("policy `{0}` is dominated by another policy in the set")]
    Dominated(String),

    #[error("missing Q-tables for policies: {0:?}")]
    MissingQTables(Vec<String>),

    #[error("policy `{0}` has no behavior matrix")]
    MissingBehavior(String),

    #[error("no valid k-medoids partitioning: {0}")]
    NoValidPartitioning(String),

    #[error("invalid environment: {0}")]
    InvalidEnv(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
