use std::fmt;
use std::str::FromStr;

use crate::seq::PackedSeq;

use super::peq::Peq;
use super::word::Word;
use super::MyersError;

/// Blocked bit-parallel scorer for one query, reusable across candidates.
///
/// The query is split into `W::BITS`-wide chunks; the add carry and the
/// outgoing msbs of Ph and Mh are handed from chunk `k` to chunk `k + 1`
/// within each candidate step, so the chunks behave as one long word.
#[derive(Debug, Clone)]
pub struct MyersCpu<W: Word> {
    peq: Peq<W>,
    pv: Vec<W>,
    mv: Vec<W>,
}

impl<W: Word> MyersCpu<W> {
    pub fn new(query: &PackedSeq) -> Result<Self, MyersError> {
        if query.is_empty() {
            return Err(MyersError::EmptySequence);
        }
        let peq = Peq::new(query);
        let chunks = peq.chunks();
        Ok(MyersCpu {
            peq,
            pv: vec![W::ZERO; chunks],
            mv: vec![W::ZERO; chunks],
        })
    }

    pub fn m(&self) -> usize {
        self.peq.m()
    }

    pub fn score(&mut self, candidate: &PackedSeq) -> Result<u32, MyersError> {
        if candidate.is_empty() {
            return Err(MyersError::EmptySequence);
        }
        let n = candidate.len();
        Ok(self.score_codes(
            candidate
                .words()
                .iter()
                .enumerate()
                .flat_map(move |(g, &w)| {
                    let len = (n - g * 8).min(8);
                    (0..len).map(move |i| (w >> (2 * i) & 3) as u8)
                }),
        ))
    }

    /// Scores a candidate given as base codes (0..4).
    pub fn score_codes<I: IntoIterator<Item = u8>>(&mut self, candidate: I) -> u32 {
        let m = self.peq.m();
        let chunks = self.peq.chunks();
        let last = chunks - 1;
        let top = (m - 1) % W::BITS;
        for k in 0..chunks {
            self.pv[k] = self.peq.valid_mask(k);
            self.mv[k] = W::ZERO;
        }
        let mut score = m as u32;
        let mut min = score;
        for c in candidate {
            let mut add_carry = false;
            let mut ph_in = W::ZERO;
            let mut mh_in = W::ZERO;
            for k in 0..chunks {
                let eq = self.peq.get(c, k);
                let pv = self.pv[k];
                let mv = self.mv[k];
                let xv = eq | mv;
                let (s, c1) = (eq & pv).overflowing_add(pv);
                let (s, c2) = s.overflowing_add(W::from_bool(add_carry));
                add_carry = c1 || c2;
                let xh = (s ^ pv) | eq;
                let mut ph = mv | !(xh | pv);
                let mut mh = pv & xh;
                if k == last {
                    if ph.test(top) {
                        score += 1;
                    }
                    if mh.test(top) {
                        score -= 1;
                    }
                    min = min.min(score);
                }
                let ph_out = ph >> (W::BITS as u32 - 1);
                let mh_out = mh >> (W::BITS as u32 - 1);
                ph = ph << 1 | ph_in;
                mh = mh << 1 | mh_in;
                ph_in = ph_out;
                mh_in = mh_out;
                self.pv[k] = mh | !(xv | ph);
                self.mv[k] = ph & xv;
            }
        }
        min
    }
}

/// Chunk width of the scalar scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WordWidth {
    W16,
    W32,
    #[default]
    W64,
}

impl WordWidth {
    pub const ALL: [WordWidth; 3] = [WordWidth::W16, WordWidth::W32, WordWidth::W64];

    pub fn bits(self) -> usize {
        match self {
            WordWidth::W16 => 16,
            WordWidth::W32 => 32,
            WordWidth::W64 => 64,
        }
    }
}

impl fmt::Display for WordWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits())
    }
}

impl FromStr for WordWidth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "16" => Ok(WordWidth::W16),
            "32" => Ok(WordWidth::W32),
            "64" => Ok(WordWidth::W64),
            _ => Err(format!("unsupported word width {s:?} (expected 16, 32 or 64)")),
        }
    }
}

/// One-shot scalar score of a single pair.
pub fn myers_cpu(query: &PackedSeq, candidate: &PackedSeq, width: WordWidth) -> Result<u32, MyersError> {
    match width {
        WordWidth::W16 => MyersCpu::<u16>::new(query)?.score(candidate),
        WordWidth::W32 => MyersCpu::<u32>::new(query)?.score(candidate),
        WordWidth::W64 => MyersCpu::<u64>::new(query)?.score(candidate),
    }
}
