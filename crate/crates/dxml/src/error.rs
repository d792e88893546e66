use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by dataset handling, model serialization, clustering,
/// and the distributed gather.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("invalid sparse vector: {0}")]
    InvalidVector(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty row selection")]
    EmptySelection,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("truncated stream: {0}")]
    Truncated(String),

    #[error("corrupt model data: {0}")]
    Corrupt(String),

    #[error("transport failure talking to peer {peer}: {message}")]
    Transport { peer: usize, message: String },

    #[error("receive timed out after {0:?}")]
    ReceiveTimeout(std::time::Duration),

    #[error("duplicate report from worker {0}")]
    DuplicateWorker(usize),

    #[error("missing reports from workers {0:?}")]
    MissingWorkers(Vec<usize>),
}

impl Error {
    /// Process exit code for the CLI: 2 for data problems, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch { .. }
            | Error::InvalidVector(_)
            | Error::Parse { .. }
            | Error::EmptySelection
            | Error::InvalidConfig(_)
            | Error::File { .. } => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
