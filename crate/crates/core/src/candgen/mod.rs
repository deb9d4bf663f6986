//! Seed-and-extend candidate generation: a k-mer index over the reference,
//! a simulated read source, and candidate windows around seed hits.

mod candidates;
mod index;
mod layout;
mod reads;

pub use candidates::{candidate_len, generate_candidates, CandidateSet, MAX_CANDIDATES};
pub use index::{build_kmer_index, KmerIndex, INDEX_MAGIC, INDEX_VERSION};
pub use layout::{transpose_candidates, untranspose, DeviceLayout};
pub use reads::{simulate_reads, ReadSimConfig, SimulatedRead};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CandgenError {
    #[error("reference of length {len} is shorter than the required {need}")]
    ReferenceTooShort { len: usize, need: usize },
    #[error("query of length {m} is shorter than k = {k}")]
    QueryTooShort { m: usize, k: usize },
    #[error("k = {0} is out of range (1..=15)")]
    InvalidK(usize),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("malformed index: {0}")]
    MalformedIndex(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CandgenError {
    fn from(e: std::io::Error) -> Self {
        CandgenError::Io(e.to_string())
    }
}
