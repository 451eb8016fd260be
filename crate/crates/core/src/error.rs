use thiserror::Error;

use crate::pointset::PointSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("point {point} out of range 1..={degree}")]
    PointOutOfRange { point: usize, degree: usize },

    #[error("point {0} appears more than once")]
    RepeatedPoint(usize),

    #[error("malformed cycle notation at byte {pos}: {msg}")]
    MalformedCycles { pos: usize, msg: String },

    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),

    #[error("degree {degree} exceeds the supported maximum of {max} points")]
    DegreeTooLarge { degree: usize, max: usize },

    #[error("generator list is empty")]
    NoGenerators,

    #[error("group closure exceeded the cap of {cap} elements")]
    GroupTooLarge { cap: usize },

    #[error("C({v},{k}) = {count} subsets exceeds the enumeration guard {guard}; use short-orbit enumeration")]
    EnumerationGuard {
        v: usize,
        k: usize,
        count: u128,
        guard: u128,
    },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("orbit classification failed: {0}")]
    Inconsistent(String),

    #[error("base blocks {first} and {second} generate overlapping orbits")]
    DuplicateBlock { first: PointSet, second: PointSet },

    #[error("block {0} is repeated")]
    RepeatedBlock(PointSet),

    #[error("block {0} occurs in both designs")]
    SharedBlock(PointSet),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
