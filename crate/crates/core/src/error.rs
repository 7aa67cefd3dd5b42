use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::label::EntitySpan;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("malformed label at index {index}: {message}")]
    Format { index: usize, message: String },

    #[error("invalid IOB2 sequence: {label} at index {index} does not continue an entity")]
    InvalidIob2 { index: usize, label: String },

    #[error("span {span} out of range for sentence of length {length}")]
    SpanOutOfRange { span: EntitySpan, length: usize },

    #[error("spans {first} and {second} overlap")]
    SpanConflict { first: EntitySpan, second: EntitySpan },

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("{}: {cause}", path.display())]
    Io { path: PathBuf, cause: io::Error },

    #[error("markup error at character {offset}: {message}")]
    Markup { offset: usize, message: String },

    #[error("document {id}: {cause}")]
    Document { id: String, cause: Box<Error> },

    #[error("{0} is undefined on an empty dataset")]
    Undefined(&'static str),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training diverged: non-finite loss at stage {stage}, epoch {epoch}, batch {batch}")]
    Divergence { stage: usize, epoch: usize, batch: usize },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), cause: source }
    }

    pub(crate) fn parse(path: &std::path::Path, line: usize, message: impl Into<String>) -> Self {
        Error::Parse { path: path.display().to_string(), line, message: message.into() }
    }
}
