use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("aliasing: {0}")]
    Aliasing(String),

    #[error("resampling error: {0}")]
    Resampling(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("quadrature did not converge for {context}: estimate {estimate:e} above tolerance {tolerance:e} (worst subinterval [{lo:e}, {hi:e}])")]
    Quadrature {
        context: String,
        estimate: f64,
        tolerance: f64,
        lo: f64,
        hi: f64,
    },

    #[error("kernel singularity for {context}: |denominator| = {magnitude:e}")]
    Singularity { context: String, magnitude: f64 },

    #[error("principal-branch discontinuity for {context}: phase jump {jump:.3} rad at z = {at:e}")]
    BranchCut { context: String, jump: f64, at: f64 },

    #[error("coefficient table build failed at index {index:?}: {source}")]
    TableBuild {
        index: Vec<i32>,
        #[source]
        source: Box<Error>,
    },

    #[error("stale LUT: file fingerprint {found:016x} does not match requested {expected:016x}")]
    StaleLut { expected: u64, found: u64 },

    #[error("LUT format error: {0}")]
    LutFormat(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("{0}")]
    NoQualifyingDistance(String),

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
