use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("input contains no sequences")]
    EmptyCollection,

    #[error("line {line}: ambiguous base {base:?} rejected by policy")]
    AmbiguousBase { line: u64, base: char },

    #[error("kappa {kappa} is out of range ({min}..={max})")]
    KappaOutOfRange { kappa: u32, min: u32, max: u32 },

    #[error("bucket {bucket}: {source}")]
    BucketIo {
        bucket: u64,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("invalid BWT: {0}")]
    InvalidBwt(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
