use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A level violates its structural invariants.
    #[error("invalid level: {0}")]
    InvalidLevel(String),

    /// A caller broke an operation's precondition (e.g. stepping a finished episode).
    #[error("contract violation: {0}")]
    Contract(String),

    /// An enumeration exceeded its configured bound.
    #[error("capacity exceeded: {what} ({count} > cap {cap})")]
    Capacity { what: &'static str, count: usize, cap: usize },

    /// Rejection sampling could not find a legal placement.
    #[error("placement failed after {attempts} attempts: {what}")]
    Placement { what: String, attempts: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported format version: {0}")]
    Version(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    /// An iterative solver stopped before reaching its tolerance.
    #[error("did not converge after {iterations} iterations (gap {gap:e} > tol {tol:e})")]
    NoConvergence { iterations: usize, gap: f64, tol: f64 },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
