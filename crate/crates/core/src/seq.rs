//! DNA alphabet, 2-bit packing and FASTA ingestion.
//!
//! Bases are coded `A=0, C=1, G=2, T=3`. A [`PackedSeq`] stores eight bases
//! per 16-bit word; base `i` lives in word `i / 8` at bit offset
//! `2 * (i % 8)`. Bits past the last base are always zero, so two packed
//! sequences are equal iff their bases are equal.

use std::fmt;
use std::io::BufRead;

use thiserror::Error;

pub const BASES_PER_WORD: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeqError {
    #[error("invalid base {found:?} at position {position}")]
    InvalidBase { position: usize, found: char },
    #[error("malformed FASTA at line {line}: {reason}")]
    MalformedFasta { line: usize, reason: &'static str },
    #[error("I/O error reading FASTA: {0}")]
    Io(String),
    #[error("truncated packed sequence: {len} bases need {need} words, got {got}")]
    Truncated { len: usize, need: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Base {
    A = 0,
    C = 1,
    G = 2,
    T = 3,
}

impl Base {
    pub const ALL: [Base; 4] = [Base::A, Base::C, Base::G, Base::T];

    #[inline]
    pub fn code(self) -> u8 {
        self as u8
    }

    /// Inverse of [`Base::code`]; only the low two bits are looked at.
    #[inline]
    pub fn from_code(code: u8) -> Base {
        Self::ALL[(code & 3) as usize]
    }

    pub fn from_char(c: char) -> Option<Base> {
        match c {
            'A' | 'a' => Some(Base::A),
            'C' | 'c' => Some(Base::C),
            'G' | 'g' => Some(Base::G),
            'T' | 't' => Some(Base::T),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Base::A => 'A',
            Base::C => 'C',
            Base::G => 'G',
            Base::T => 'T',
        }
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// What to do with IUPAC ambiguity codes (`N`, `R`, `Y`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NPolicy {
    #[default]
    Reject,
    MapToA,
}

impl std::str::FromStr for NPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reject" => Ok(NPolicy::Reject),
            "map-a" => Ok(NPolicy::MapToA),
            other => Err(format!("unknown n-policy {other:?} (expected reject or map-a)")),
        }
    }
}

impl fmt::Display for NPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NPolicy::Reject => "reject",
            NPolicy::MapToA => "map-a",
        })
    }
}

fn is_ambiguity_code(c: char) -> bool {
    matches!(
        c.to_ascii_uppercase(),
        'N' | 'R' | 'Y' | 'S' | 'W' | 'K' | 'M' | 'B' | 'D' | 'H' | 'V'
    )
}

fn map_char(c: char, position: usize, policy: NPolicy) -> Result<Base, SeqError> {
    match Base::from_char(c) {
        Some(b) => Ok(b),
        None if policy == NPolicy::MapToA && is_ambiguity_code(c) => Ok(Base::A),
        None => Err(SeqError::InvalidBase { position, found: c }),
    }
}

/// A DNA sequence packed 2 bits per base, 8 bases per little-endian `u16`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct PackedSeq {
    len: usize,
    words: Vec<u16>,
}

impl fmt::Debug for PackedSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 64 {
            write!(f, "PackedSeq({:?})", unpack_seq(self))
        } else {
            write!(f, "PackedSeq(len={})", self.len)
        }
    }
}

#[inline]
pub fn words_for(len: usize) -> usize {
    len.div_ceil(BASES_PER_WORD)
}

impl PackedSeq {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bases: usize) -> Self {
        PackedSeq {
            len: 0,
            words: Vec::with_capacity(words_for(bases)),
        }
    }

    pub fn from_bases<I: IntoIterator<Item = Base>>(bases: I) -> Self {
        let mut seq = PackedSeq::new();
        for b in bases {
            seq.push(b);
        }
        seq
    }

    /// Rebuilds a sequence from its packed words. Stray bits past `len` are
    /// rejected by clearing them, so the zero-padding invariant always holds.
    pub fn from_words(len: usize, mut words: Vec<u16>) -> Result<Self, SeqError> {
        let need = words_for(len);
        if words.len() < need {
            return Err(SeqError::Truncated {
                len,
                need,
                got: words.len(),
            });
        }
        words.truncate(need);
        let tail = len % BASES_PER_WORD;
        if tail != 0 {
            let last = words.last_mut().expect("tail implies at least one word");
            *last &= (1u16 << (2 * tail)) - 1;
        }
        Ok(PackedSeq { len, words })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u16] {
        &self.words
    }

    pub fn push(&mut self, base: Base) {
        let slot = self.len % BASES_PER_WORD;
        if slot == 0 {
            self.words.push(0);
        }
        let w = self.words.last_mut().expect("word pushed above");
        *w |= (base.code() as u16) << (2 * slot);
        self.len += 1;
    }

    #[inline]
    pub fn get(&self, i: usize) -> Base {
        assert!(i < self.len, "base index {i} out of range for length {}", self.len);
        let w = self.words[i / BASES_PER_WORD];
        Base::from_code((w >> (2 * (i % BASES_PER_WORD))) as u8)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = Base> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Copies bases `start..start + len` into a fresh sequence.
    pub fn window(&self, start: usize, len: usize) -> PackedSeq {
        assert!(start + len <= self.len, "window past end of sequence");
        if start.is_multiple_of(BASES_PER_WORD) {
            let first = start / BASES_PER_WORD;
            let words = self.words[first..first + words_for(len)].to_vec();
            return PackedSeq::from_words(len, words).expect("enough words");
        }
        let mut out = PackedSeq::with_capacity(len);
        for i in start..start + len {
            out.push(self.get(i));
        }
        out
    }

    /// Little-endian byte image of the packed words (the staging format).
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.words.iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    pub fn from_le_bytes(len: usize, bytes: &[u8]) -> Result<Self, SeqError> {
        let words = bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        PackedSeq::from_words(len, words)
    }
}

impl fmt::Display for PackedSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

pub fn pack_seq(text: &str) -> Result<PackedSeq, SeqError> {
    pack_seq_with(text, NPolicy::Reject)
}

pub fn pack_seq_with(text: &str, policy: NPolicy) -> Result<PackedSeq, SeqError> {
    let mut seq = PackedSeq::with_capacity(text.len());
    for (i, c) in text.chars().enumerate() {
        seq.push(map_char(c, i, policy)?);
    }
    Ok(seq)
}

pub fn unpack_seq(p: &PackedSeq) -> String {
    p.iter().map(Base::to_char).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FastaRecord {
    pub id: String,
    pub seq: PackedSeq,
}

/// Reads every record of a FASTA stream.
///
/// The record id is the first whitespace-delimited token of the header.
/// Blank lines are skipped and `\r\n` endings are tolerated.
pub fn parse_fasta<R: BufRead>(reader: R, policy: NPolicy) -> Result<Vec<FastaRecord>, SeqError> {
    let mut records = Vec::new();
    let mut current: Option<FastaRecord> = None;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| SeqError::Io(e.to_string()))?;
        let line = line.trim_end_matches(['\r', '\n']);
        let lineno = lineno + 1;
        if let Some(header) = line.strip_prefix('>') {
            if let Some(done) = current.take() {
                records.push(done);
            }
            let id = header.split_whitespace().next().unwrap_or("");
            if id.is_empty() {
                return Err(SeqError::MalformedFasta {
                    line: lineno,
                    reason: "empty record id",
                });
            }
            current = Some(FastaRecord {
                id: id.to_string(),
                seq: PackedSeq::new(),
            });
            continue;
        }
        let data = line.trim();
        if data.is_empty() {
            continue;
        }
        let Some(rec) = current.as_mut() else {
            return Err(SeqError::MalformedFasta {
                line: lineno,
                reason: "sequence data before first header",
            });
        };
        for c in data.chars() {
            let pos = rec.seq.len();
            rec.seq.push(map_char(c, pos, policy)?);
        }
    }
    if let Some(done) = current {
        records.push(done);
    }
    Ok(records)
}

pub fn write_fasta<W: std::io::Write>(mut out: W, id: &str, seq: &PackedSeq) -> std::io::Result<()> {
    writeln!(out, ">{id}")?;
    let text = unpack_seq(seq);
    for line in text.as_bytes().chunks(80) {
        out.write_all(line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
