use thiserror::Error;

/// Errors surfaced by the library. The CLI maps them onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid triangulation: {0}")]
    Triangulation(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("inapplicable move: {0}")]
    Path(String),
    #[error("cocycle check failed: {0}")]
    Cocycle(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
