use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("keyword list is empty after normalization")]
    EmptyText,
    #[error("DNF clause {0} is empty after normalization")]
    EmptyClause(usize),
    #[error("DNF query has no clauses")]
    NoClauses,
    #[error("invalid pyramid level {level} (top level is {top})")]
    InvalidLevel { level: u32, top: u32 },
    #[error("cell ({x}, {y}) is outside level {level}")]
    InvalidCoords { level: u32, x: u32, y: u32 },
    #[error("location ({x}, {y}) is outside the indexed space")]
    OutOfSpace { x: f64, y: f64 },
    #[error("malformed rectangle ({x_min}, {y_min}, {x_max}, {y_max})")]
    InvalidMbr {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("query expires at {t_exp} which is not after the current time {now}")]
    Expired { t_exp: u64, now: u64 },
    #[error("query {0} is already indexed")]
    DuplicateQuery(u64),
    #[error("query {0} is not indexed")]
    UnknownQuery(u64),
    #[error("frequency of keyword {0:?} would drop below zero")]
    UnderflowViolation(String),
    #[error("keyword {0:?} has no posting length")]
    UnknownKeyword(String),
    #[error("division by zero")]
    DivideByZero,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io: {0}")]
    Io(String),
    #[error(
        "oracle mismatch on object {oid}: index returned {index:?}, oracle returned {oracle:?}"
    )]
    OracleMismatch {
        oid: u64,
        index: Vec<u64>,
        oracle: Vec<u64>,
    },
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
