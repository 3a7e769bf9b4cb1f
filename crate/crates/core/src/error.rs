use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest line {line}: {field}: {message}")]
    Manifest {
        line: usize,
        field: String,
        message: String,
    },

    #[error("duplicate page_id '{page_id}' on lines {first_line} and {second_line}")]
    DuplicatePage {
        page_id: String,
        first_line: usize,
        second_line: usize,
    },

    #[error("synonym file line {line}: {message}")]
    SynonymSyntax { line: usize, message: String },

    #[error("word '{word}' in two groups (lines {first_line} and {second_line})")]
    SynonymOverlap {
        word: String,
        first_line: usize,
        second_line: usize,
    },

    #[error("unsupported segment: {0}")]
    UnsupportedSegment(String),

    #[error("corrupt segment: {file}: {message}")]
    CorruptSegment { file: String, message: String },

    #[error(transparent)]
    Query(#[from] QueryError),

    #[error("snippet contract violation: {0}")]
    Snippet(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(file: &str, message: impl Into<String>) -> Self {
        Error::CorruptSegment {
            file: file.to_string(),
            message: message.into(),
        }
    }
}

/// Errors raised while parsing or validating a search request.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("empty query")]
    EmptyQuery,

    #[error("unbalanced quote at column {column}")]
    UnbalancedQuote { column: usize },

    #[error("bad year range: year_from {from} > year_to {to}")]
    BadYearRange { from: i32, to: i32 },

    #[error("unknown journal '{journal}'; known journals: {}", known.join(", "))]
    UnknownJournal { journal: String, known: Vec<String> },
}

impl QueryError {
    /// Stable machine-readable code, used in API error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            QueryError::EmptyQuery => "empty_query",
            QueryError::UnbalancedQuote { .. } => "unbalanced_quote",
            QueryError::BadYearRange { .. } => "bad_year_range",
            QueryError::UnknownJournal { .. } => "unknown_journal",
        }
    }
}
