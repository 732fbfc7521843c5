use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("duplicate dimension name `{0}`")]
    DuplicateDimension(String),

    #[error("duplicate record id `{0}`")]
    DuplicateRecord(String),

    #[error("line {line}: empty cell in column `{column}`")]
    EmptyCell { line: u64, column: String },

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("dataset has no {0}")]
    Empty(&'static str),

    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),

    #[error("value `{value}` is not in the domain of dimension `{dimension}`")]
    UnknownValue { dimension: String, value: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
