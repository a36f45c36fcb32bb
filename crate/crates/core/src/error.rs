use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("unbound name `{0}`")]
    UnboundName(String),
    #[error("value {value} is outside the domain of channel `{channel}`")]
    DomainError { channel: String, value: String },
    #[error("type error: {0}")]
    TypeError(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("arity mismatch calling `{name}`: expected {expected}, got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("unguarded recursion through `{0}`")]
    UnguardedRecursion(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("state bound exceeded after {states} states")]
    BoundExceeded { states: usize },
    #[error("wall-clock budget exceeded after {states} states")]
    TimeExceeded { states: usize },
    #[error("unknown assertion `{0}`")]
    UnknownAssertion(String),
}

pub type Result<T> = std::result::Result<T, Error>;
