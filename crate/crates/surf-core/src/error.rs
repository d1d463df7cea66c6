//! Error taxonomy shared by all modules.
//!
//! The CLI maps `MetricDomain` to exit code 2 and everything else to 1, so
//! keep the distinction between "your input was bad" and "the metric is
//! undefined on this data" intact when adding variants.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or unusable input (empty image, image smaller than the base
    /// filter, mismatched evaluation coverage, missing sequence files, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Rectangle with reversed or out-of-range corners.
    #[error("invalid rectangle ({x1},{y1})-({x2},{y2})")]
    InvalidRectangle { x1: i64, y1: i64, x2: i64, y2: i64 },

    /// Sub-pixel interpolation rejected the candidate extremum.
    #[error("degenerate interpolation fit: {0}")]
    DegenerateFit(&'static str),

    /// Homogeneous projection produced w = 0.
    #[error("projected point at infinity")]
    PointAtInfinity,

    /// Descriptor region contained no gradient energy at all.
    #[error("zero descriptor")]
    ZeroDescriptor,

    /// A stability metric is undefined on the given data (e.g. |P| = |T| in
    /// the modified repeatability ratio).
    #[error("metric domain error: {0}")]
    MetricDomain(String),

    /// Text format violation; `line` is 1-based within the offending file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MetricDomain(_) => 2,
            _ => 1,
        }
    }
}
