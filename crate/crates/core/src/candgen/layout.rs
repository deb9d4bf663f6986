//! Column-major device layout for a candidate set.

use crate::seq::{words_for, PackedSeq};

use super::CandgenError;

/// Candidates transposed for the device: for every 8-base group `g` there is
/// one run of `count` words, word `c` holding bases `8g..8g+8` of candidate
/// `c`. A whole group loads into one vector register with candidate `c` in
/// column `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceLayout {
    n: usize,
    count: usize,
    words: Vec<u16>,
}

impl DeviceLayout {
    pub fn from_raw(n: usize, count: usize, words: Vec<u16>) -> Result<Self, CandgenError> {
        if words.len() != words_for(n) * count {
            return Err(CandgenError::LengthMismatch {
                expected: words_for(n) * count,
                found: words.len(),
            });
        }
        Ok(DeviceLayout { n, count, words })
    }

    /// Candidate length in bases.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn groups(&self) -> usize {
        words_for(self.n)
    }

    pub fn words(&self) -> &[u16] {
        &self.words
    }

    /// The `count` words of base group `g`.
    pub fn group(&self, g: usize) -> &[u16] {
        &self.words[g * self.count..(g + 1) * self.count]
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.words.iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    pub fn from_le_bytes(n: usize, count: usize, bytes: &[u8]) -> Result<Self, CandgenError> {
        if !bytes.len().is_multiple_of(2) {
            return Err(CandgenError::LengthMismatch {
                expected: bytes.len() + 1,
                found: bytes.len(),
            });
        }
        let words = bytes.chunks_exact(2).map(|b| u16::from_le_bytes([b[0], b[1]])).collect();
        DeviceLayout::from_raw(n, count, words)
    }
}

/// Transposes equal-length candidates into the device layout.
pub fn transpose_candidates<'a, I>(entries: I, n: usize) -> Result<DeviceLayout, CandgenError>
where
    I: IntoIterator<Item = &'a PackedSeq>,
    I::IntoIter: ExactSizeIterator,
{
    let entries = entries.into_iter();
    let count = entries.len();
    let groups = words_for(n);
    let mut words = vec![0u16; groups * count];
    for (c, seq) in entries.enumerate() {
        if seq.len() != n {
            return Err(CandgenError::LengthMismatch {
                expected: n,
                found: seq.len(),
            });
        }
        for (g, &w) in seq.words().iter().enumerate() {
            words[g * count + c] = w;
        }
    }
    Ok(DeviceLayout { n, count, words })
}

/// Inverse of [`transpose_candidates`].
pub fn untranspose(layout: &DeviceLayout) -> Vec<PackedSeq> {
    (0..layout.count)
        .map(|c| {
            let words = (0..layout.groups()).map(|g| layout.words[g * layout.count + c]).collect();
            PackedSeq::from_words(layout.n, words).expect("layout words are sized for n")
        })
        .collect()
}
