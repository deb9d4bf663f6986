use std::collections::BTreeSet;
use std::io::Write;

use crate::seq::{unpack_seq, PackedSeq};

use super::{transpose_candidates, CandgenError, DeviceLayout, KmerIndex};

/// Most candidates one query can carry: one per device column.
pub const MAX_CANDIDATES: usize = crate::sim::DEVICE_COLUMNS;

/// Candidate window length for a query of length `m`: 15% longer, rounded up.
pub fn candidate_len(m: usize) -> usize {
    m + (15 * m).div_ceil(100)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub query_id: String,
    pub m: usize,
    pub n: usize,
    /// `(ref_start, window)` in ascending `ref_start` order.
    pub entries: Vec<(usize, PackedSeq)>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn starts(&self) -> Vec<usize> {
        self.entries.iter().map(|(s, _)| *s).collect()
    }

    pub fn device_layout(&self) -> DeviceLayout {
        transpose_candidates(self.entries.iter().map(|(_, w)| w).collect::<Vec<_>>(), self.n)
            .expect("all windows have length n")
    }

    /// Rows of `query_id \t ref_start \t window`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (start, window) in &self.entries {
            writeln!(out, "{}\t{}\t{}", self.query_id, start, unpack_seq(window))?;
        }
        Ok(())
    }

    /// Keeps the first `cap` entries.
    pub fn truncate(&mut self, cap: usize) {
        self.entries.truncate(cap);
    }
}

/// Looks up every k-mer of `read` and cuts a window of `candidate_len(m)`
/// bases around each hit. The slack is split before and after the seed in
/// proportion to the seed's offset in the read. Windows are deduplicated by
/// start; at most `cap` are kept, lowest starts first.
pub fn generate_candidates(
    query_id: &str,
    read: &PackedSeq,
    index: &KmerIndex,
    reference: &PackedSeq,
    cap: usize,
) -> Result<CandidateSet, CandgenError> {
    let m = read.len();
    let k = index.k();
    if m < k {
        return Err(CandgenError::QueryTooShort { m, k });
    }
    let n = candidate_len(m);
    if reference.len() < n {
        return Err(CandgenError::ReferenceTooShort {
            len: reference.len(),
            need: n,
        });
    }
    let slack = n - m;
    let last_start = reference.len() - n;
    let span = (m - k).max(1);
    let mut starts = BTreeSet::new();
    for o in 0..=m - k {
        let before = o + slack * o / span;
        for &p in index.lookup(index.code_at(read, o)) {
            let start = (p as usize).saturating_sub(before).min(last_start);
            starts.insert(start);
        }
    }
    let entries = starts
        .into_iter()
        .take(cap)
        .map(|s| (s, reference.window(s, n)))
        .collect();
    Ok(CandidateSet {
        query_id: query_id.to_string(),
        m,
        n,
        entries,
    })
}
