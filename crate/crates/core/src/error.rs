use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parent relation contains a cycle through variable {0}")]
    CycleDetected(usize),
    #[error("table for variable {variable} has {actual} entries, expected {expected}")]
    TableSizeMismatch {
        variable: usize,
        expected: usize,
        actual: usize,
    },
    #[error("table entry {value} is negative or not finite")]
    NegativeProbability { value: f64 },
    #[error("CPT of variable {variable} does not sum to one for parent configuration {row}")]
    CptNotNormalized { variable: usize, row: usize },
    #[error("variable {variable} has invalid cardinality {cardinality}")]
    InvalidCardinality { variable: usize, cardinality: usize },
    #[error("unknown variable id {0}")]
    UnknownVariable(usize),
    #[error("variable {0} appears twice in a scope or parent list")]
    DuplicateVariable(usize),
    #[error("variable {0} has both hard and soft evidence")]
    EvidenceConflict(usize),
    #[error("value {value} out of range for variable {variable}")]
    ValueOutOfRange { variable: usize, value: usize },
    #[error("assignment contradicts evidence on variable {0}")]
    EvidenceContradiction(usize),
    #[error("ordering is not a permutation of the variables")]
    OrderingMismatch,
    #[error("variable {0} has inconsistent cardinalities across factors")]
    CardinalityMismatch(usize),
    #[error("variable {0} is not in the factor scope")]
    VariableNotInScope(usize),
    #[error("{0} joint configurations exceed the brute-force limit")]
    TooLargeForBruteForce(u128),
    #[error("evidence has probability zero")]
    ZeroEvidenceProbability,
    #[error("generated table of {entries} entries exceeds the budget of {budget}")]
    OutOfMemoryBudget { entries: u128, budget: usize },
    #[error("hypothesis variables must form a prefix of the ordering")]
    OrderingViolatesHypothesisPrefix,
    #[error("query variable {0} is observed or not first in the ordering")]
    InvalidQuery(usize),
    #[error("message from node {0} has zero total mass")]
    NumericalCollapse(usize),
    #[error("generator matrix is not systematic")]
    NotSystematic,
    #[error("parity column {0} has no nonzero entry")]
    EmptyParityColumn(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("configuration error: {0}")]
    Config(String),
}
