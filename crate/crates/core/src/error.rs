use thiserror::Error;

/// Errors produced anywhere in the synthesis and analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate set: every value is zero")]
    DegenerateSet,
    #[error("empty input")]
    EmptyInput,
    #[error("value is not finite: {0}")]
    NonFinite(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("all elements even: caller must divide by GCD first")]
    NoOddElement,
    #[error("invalid phase set: {0}")]
    InvalidPhaseSet(String),
    #[error("bit string has {got} entries but the circuit has {expected} lines")]
    LengthMismatch { expected: usize, got: usize },
    #[error("bit values not realizable by this construction: {0}")]
    UnrealizableBitValues(String),
    #[error("matrix too large: {0} qubits (limit {1})")]
    TooManyQubits(usize, usize),
    #[error("choose generic theta: outcome probability {0:e} below threshold")]
    NearZeroProbability(f64),
    #[error("outcome has zero likelihood everywhere on the grid")]
    ImpossibleOutcome,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
