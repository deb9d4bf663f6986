//! Semi-global edit distance three ways: a DP oracle, a blocked scalar
//! bit-vector scorer, and the same algorithm as a simulator program.

mod apu;
mod cpu;
mod dp;
mod peq;
mod word;

pub use apu::{
    free_candidates, kernel_cycles, myers_apu_kernel, read_scores, run_kernel, stage_candidates, DeviceCandidates,
    KernelOutput, KERNEL_SECTIONS, MAX_CHUNKS, SECTION_EQ, SECTION_XH,
};
pub use cpu::{myers_cpu, MyersCpu, WordWidth};
pub use dp::edit_distance_dp;
pub use peq::{compute_peq, Peq, PeqTable};
pub use word::Word;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SimError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MyersError {
    #[error("empty query or candidate")]
    EmptySequence,
    #[error("{count} candidates do not fit in {columns} columns")]
    TooManyCandidates { count: usize, columns: usize },
    #[error("query of length {m} exceeds the device limit of {max}")]
    QueryTooLong { m: usize, max: usize },
    #[error("candidate length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub query_id: String,
    pub candidate_id: usize,
    pub ref_start: usize,
    pub score: u32,
    pub kept: bool,
}

impl FilterVerdict {
    /// One `verdicts.tsv` row, without trailing newline.
    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.query_id, self.candidate_id, self.ref_start, self.score, u8::from(self.kept)
        )
    }
}

pub const VERDICT_HEADER: &str = "query_id\tcandidate_id\tref_start\tscore\tkept";

/// Keeps every candidate scoring at most `threshold`, in input order.
/// `ref_starts[i]` is the reference position of candidate `i`.
pub fn filter_candidates(query_id: &str, ref_starts: &[usize], scores: &[u32], threshold: u32) -> Vec<FilterVerdict> {
    assert_eq!(ref_starts.len(), scores.len(), "one start per score");
    scores
        .iter()
        .zip(ref_starts)
        .enumerate()
        .map(|(i, (&score, &ref_start))| FilterVerdict {
            query_id: query_id.to_string(),
            candidate_id: i,
            ref_start,
            score,
            kept: score <= threshold,
        })
        .collect()
}

/// `ceil(0.10 * m)`.
pub fn default_threshold(m: usize) -> u32 {
    m.div_ceil(10) as u32
}

#[cfg(test)]
mod tests;
