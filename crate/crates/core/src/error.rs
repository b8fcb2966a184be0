//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised while ranking data, evaluating statistics, enumerating
/// moments, generating models or running experiments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("column {column} contains tied values")]
    TiesPresent { column: usize },

    #[error("rank {rank} outside 1..={n}")]
    InvalidRank { rank: usize, n: usize },

    #[error("kernel table needs {required} bytes, budget is {budget}")]
    CapacityExceeded { required: u128, budget: u128 },

    #[error("bad index set: {0}")]
    BadIndexSet(String),

    #[error("C(d, k) = {count} subsets exceeds the budget of {budget}")]
    SubsetBudgetExceeded { count: u128, budget: u128 },

    #[error("invalid order: {0}")]
    InvalidOrder(String),

    #[error("variance is degenerate for n = {n}, k = {k}")]
    DegenerateVariance { n: usize, k: usize },

    #[error("sample too small for a non-degenerate scale (n = {n}, k = {k})")]
    InsufficientSample { n: usize, k: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pattern {id} needs {required} distinct indices, n = {n}")]
    PatternInfeasible {
        id: String,
        required: usize,
        n: usize,
    },

    #[error("enumeration of {configurations} configurations exceeds the limit")]
    EnumerationTooLarge { configurations: u128 },

    #[error("catalog mismatch for {id} at n = {n}: closed form {closed_form}, enumeration {brute_force}")]
    MismatchFound {
        id: String,
        n: usize,
        closed_form: String,
        brute_force: String,
    },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
