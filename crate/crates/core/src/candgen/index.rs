use std::io::{Read, Write};

use crate::seq::PackedSeq;

use super::CandgenError;

pub const INDEX_MAGIC: &[u8; 8] = b"CIMFKIDX";
pub const INDEX_VERSION: u32 = 1;

/// All k-mer positions of a reference, stored as a sorted table: `keys[i]`
/// occurs at `positions[offsets[i]..offsets[i + 1]]`. Codes put the first
/// base in the most significant bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KmerIndex {
    k: usize,
    max_occ: usize,
    ref_len: usize,
    dropped: usize,
    keys: Vec<u32>,
    offsets: Vec<u32>,
    positions: Vec<u32>,
}

/// Indexes every k-mer of `reference`, then drops k-mers with more than
/// `max_occ` occurrences.
pub fn build_kmer_index(reference: &PackedSeq, k: usize, max_occ: usize) -> Result<KmerIndex, CandgenError> {
    if k == 0 || k > 15 {
        return Err(CandgenError::InvalidK(k));
    }
    if reference.len() < k {
        return Err(CandgenError::ReferenceTooShort {
            len: reference.len(),
            need: k,
        });
    }
    let mask = (1u64 << (2 * k)) - 1;
    let mut entries = Vec::with_capacity(reference.len() - k + 1);
    let mut code = 0u64;
    for (i, b) in reference.iter().enumerate() {
        code = (code << 2 | u64::from(b.code())) & mask;
        if i + 1 >= k {
            entries.push(code << 32 | (i + 1 - k) as u64);
        }
    }
    entries.sort_unstable();

    let mut keys = Vec::new();
    let mut offsets = vec![0u32];
    let mut positions = Vec::with_capacity(entries.len());
    let mut dropped = 0;
    for run in entries.chunk_by(|a, b| a >> 32 == b >> 32) {
        if run.len() > max_occ {
            dropped += 1;
            continue;
        }
        keys.push((run[0] >> 32) as u32);
        positions.extend(run.iter().map(|&e| e as u32));
        offsets.push(positions.len() as u32);
    }
    Ok(KmerIndex {
        k,
        max_occ,
        ref_len: reference.len(),
        dropped,
        keys,
        offsets,
        positions,
    })
}

impl KmerIndex {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn max_occ(&self) -> usize {
        self.max_occ
    }

    pub fn ref_len(&self) -> usize {
        self.ref_len
    }

    /// Distinct k-mers removed by the occurrence cap.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Distinct k-mers kept.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn total_positions(&self) -> usize {
        self.positions.len()
    }

    /// Ascending reference positions of `code`; empty if absent or dropped.
    pub fn lookup(&self, code: u32) -> &[u32] {
        match self.keys.binary_search(&code) {
            Ok(i) => &self.positions[self.offsets[i] as usize..self.offsets[i + 1] as usize],
            Err(_) => &[],
        }
    }

    /// Code of the k-mer of `seq` starting at `at`.
    pub fn code_at(&self, seq: &PackedSeq, at: usize) -> u32 {
        (at..at + self.k).fold(0u32, |c, i| c << 2 | u32::from(seq.get(i).code()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[u32])> + '_ {
        self.keys.iter().enumerate().map(move |(i, &key)| {
            (key, &self.positions[self.offsets[i] as usize..self.offsets[i + 1] as usize])
        })
    }

    /// Writes the little-endian binary container.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), CandgenError> {
        w.write_all(INDEX_MAGIC)?;
        w.write_all(&INDEX_VERSION.to_le_bytes())?;
        w.write_all(&(self.k as u32).to_le_bytes())?;
        for v in [self.max_occ, self.ref_len, self.dropped, self.keys.len(), self.positions.len()] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        for table in [&self.keys, &self.offsets, &self.positions] {
            let bytes: Vec<u8> = table.iter().flat_map(|v| v.to_le_bytes()).collect();
            w.write_all(&bytes)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<KmerIndex, CandgenError> {
        let bad = |msg: &str| CandgenError::MalformedIndex(msg.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != INDEX_MAGIC {
            return Err(bad("bad magic bytes"));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf).map_err(|_| bad("truncated header"))?;
        let version = u32::from_le_bytes(u32buf);
        if version != INDEX_VERSION {
            return Err(CandgenError::MalformedIndex(format!("unsupported version {version}")));
        }
        r.read_exact(&mut u32buf).map_err(|_| bad("truncated header"))?;
        let k = u32::from_le_bytes(u32buf) as usize;
        if k == 0 || k > 15 {
            return Err(CandgenError::InvalidK(k));
        }
        let mut header = [0u64; 5];
        for v in &mut header {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(|_| bad("truncated header"))?;
            *v = u64::from_le_bytes(b);
        }
        let [max_occ, ref_len, dropped, nkeys, npos] = header.map(|v| v as usize);
        let mut read_table = |len: usize| -> Result<Vec<u32>, CandgenError> {
            let mut bytes = vec![0u8; len.checked_mul(4).ok_or_else(|| bad("table too large"))?];
            r.read_exact(&mut bytes).map_err(|_| bad("truncated table"))?;
            Ok(bytes.chunks_exact(4).map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect())
        };
        let keys = read_table(nkeys)?;
        let offsets = read_table(nkeys + 1)?;
        let positions = read_table(npos)?;
        let sorted = keys.windows(2).all(|w| w[0] < w[1]);
        let offsets_ok = offsets.first() == Some(&0)
            && offsets.last() == Some(&(npos as u32))
            && offsets.windows(2).all(|w| w[0] < w[1]);
        if !sorted || !offsets_ok {
            return Err(bad("inconsistent tables"));
        }
        Ok(KmerIndex {
            k,
            max_occ,
            ref_len,
            dropped,
            keys,
            offsets,
            positions,
        })
    }
}
