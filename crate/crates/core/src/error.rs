use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Sidecar { path: PathBuf, message: String },

    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },

    #[error("{what} out of range at column {column}: {value}")]
    Range {
        what: &'static str,
        column: usize,
        value: String,
    },

    #[error("term not indexed: {0}")]
    TermNotIndexed(String),

    #[error("empty index")]
    EmptyIndex,

    #[error("unknown document: {0}")]
    UnknownDocument(String),

    #[error("snapshot version mismatch: found {found:?}, expected {expected:?}")]
    Version { found: String, expected: String },

    #[error("parse error at byte {offset}: {message}")]
    Json { offset: usize, message: String },

    #[error("invalid snapshot: {0}")]
    Snapshot(String),

    #[error("length mismatch: {docs} document weights vs {query} query weights")]
    LengthMismatch { docs: usize, query: usize },

    #[error("degenerate judgments; use smoothing")]
    DegenerateJudgments,

    #[error("infinite odds; use smoothing")]
    InfiniteOdds,

    #[error("{0} parents exceed the enumeration limit; use closed form")]
    TooManyParents(usize),

    #[error("not a DAG")]
    Cycle,

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("insufficient top documents")]
    InsufficientTopDocuments,

    #[error("label {0:?} produces an empty slug")]
    EmptySlug(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("query missing from qrels: {0:?}")]
    MissingQrels(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Converts a serde_json error into [`Error::Json`], translating its
    /// line/column position into a byte offset within `input`.
    pub(crate) fn json(input: &str, err: &serde_json::Error) -> Self {
        Error::Json {
            offset: byte_offset(input, err.line(), err.column()),
            message: err.to_string(),
        }
    }
}

fn byte_offset(input: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = input
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(input.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_offset_counts_previous_lines() {
        assert_eq!(byte_offset("abc", 1, 1), 0);
        assert_eq!(byte_offset("ab\ncd", 2, 2), 4);
        assert_eq!(byte_offset("ab", 5, 9), 2);
    }
}
