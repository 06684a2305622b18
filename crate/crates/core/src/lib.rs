//! Multi-string Burrows-Wheeler transform of DNA word collections.
//!
//! Words are inserted right-aligned, one symbol per word per iteration,
//! into buckets keyed by a short predecessor context. Count trees over the
//! buckets turn local ranks into global ones, so each bucket is rewritten
//! only when it receives symbols.
//!
//! ```
//! use bucketbwt::{build, Config, WordCollection};
//!
//! let words = WordCollection::from_words(["AC", "C"]).unwrap();
//! assert_eq!(build(&words, &Config::in_memory(3)).unwrap(), b"CC$A$");
//! ```

pub mod alphabet;
pub mod bucket;
pub mod collection;
pub mod engine;
pub mod error;
pub mod oracle;
pub mod tree;

pub use alphabet::Symbol;
pub use bucket::{Backend, Encoding};
pub use collection::{parse_sequences, AmbiguousHandling, IngestPolicy, InputFormat, WordCollection};
pub use engine::{build, build_to_writer, BuildReport, Config, IterationView, Observer};
pub use error::{Error, Result};
