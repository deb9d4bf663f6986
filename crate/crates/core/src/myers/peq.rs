use crate::seq::{Base, PackedSeq};

use super::word::Word;

/// Per-base match vectors of a query, in chunks of `W::BITS` positions:
/// bit `i` of `row(b)[k]` is set iff query base `k*BITS + i` is `b`.
/// Positions past the end of the query are clear in every row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Peq<W> {
    m: usize,
    rows: [Vec<W>; 4],
}

/// The 16-bit table the device kernel uses.
pub type PeqTable = Peq<u16>;

impl<W: Word> Peq<W> {
    pub fn new(query: &PackedSeq) -> Self {
        let chunks = query.len().div_ceil(W::BITS);
        let mut rows: [Vec<W>; 4] = std::array::from_fn(|_| vec![W::ZERO; chunks]);
        for (i, b) in query.iter().enumerate() {
            let w = &mut rows[b.code() as usize][i / W::BITS];
            *w = *w | W::bit(i % W::BITS);
        }
        Peq { m: query.len(), rows }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn chunks(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, b: Base) -> &[W] {
        &self.rows[b.code() as usize]
    }

    #[inline]
    pub fn get(&self, code: u8, k: usize) -> W {
        self.rows[code as usize][k]
    }

    /// Ones over the query positions that fall in chunk `k`.
    pub fn valid_mask(&self, k: usize) -> W {
        let used = (self.m - k * W::BITS).min(W::BITS);
        W::low_ones(used)
    }
}

pub fn compute_peq(query: &PackedSeq) -> PeqTable {
    Peq::new(query)
}
