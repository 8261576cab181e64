use thiserror::Error;

/// Errors produced by parameter validation and numeric routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates its documented constraint.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Graph file could not be parsed.
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),

    /// The fixed-point bracketing scan did not find exactly one interior
    /// sign change. For k = 2, 3 the map has a unique interior fixed point,
    /// so anything else indicates a numeric problem worth surfacing.
    #[error(
        "bracketing failure for k={k}, lambda={lambda}: found {sign_changes} interior sign change(s), expected 1"
    )]
    Bracketing {
        lambda: f64,
        k: u32,
        sign_changes: usize,
    },

    /// Requested truncation is too short for the tail bound.
    #[error("k_max={k_max} leaves tail mass {tail:.3e} above the {bound:.0e} bound")]
    TruncationTooSmall { k_max: usize, tail: f64, bound: f64 },

    /// A generalized-rule probability vector is shorter than the series
    /// truncation needs.
    #[error("rule vector too short: need {needed} entries, got {got}")]
    RuleTooShort { needed: usize, got: usize },
}

impl Error {
    /// True for plain input-validation failures (CLI exit code 2), false for
    /// numeric diagnostics such as bracketing failures (CLI exit code 3).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Bracketing { .. })
    }
}

/// Graph-file parse failures, one variant per rejected malformation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("malformed header (expected \"N c seed\"): {0}")]
    MalformedHeader(String),

    #[error("invalid parameters in header: {0}")]
    InvalidParams(String),

    #[error("line {line}: malformed edge (expected \"x1 y1 x2 y2\")")]
    MalformedEdge { line: usize },

    #[error("line {line}: coordinate out of range")]
    CoordinateOutOfRange { line: usize },

    #[error("line {line}: duplicate edge")]
    DuplicateEdge { line: usize },

    #[error("line {line}: edge joins vertices at distance < 2")]
    EdgeTooShort { line: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
