use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::seq::{Base, PackedSeq};

use super::CandgenError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulatedRead {
    pub id: String,
    pub seq: PackedSeq,
    pub true_start: usize,
    pub edits_applied: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadSimConfig {
    pub count: usize,
    pub length: usize,
    pub sub_rate: f64,
    pub indel_rate: f64,
    pub seed: u64,
}

impl Default for ReadSimConfig {
    fn default() -> Self {
        ReadSimConfig {
            count: 100,
            length: 300,
            sub_rate: 0.005,
            indel_rate: 0.001,
            seed: 1,
        }
    }
}

/// Draws reads from uniformly placed reference windows, applying per-base
/// substitutions and insertions/deletions while copying. Deletions are only
/// taken while enough reference remains to finish the read at full length.
pub fn simulate_reads(reference: &PackedSeq, cfg: &ReadSimConfig) -> Result<Vec<SimulatedRead>, CandgenError> {
    let len = cfg.length;
    if reference.len() < len || len == 0 {
        return Err(CandgenError::ReferenceTooShort {
            len: reference.len(),
            need: len.max(1),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut reads = Vec::with_capacity(cfg.count);
    for i in 0..cfg.count {
        let start = rng.gen_range(0..=reference.len() - len);
        let mut pos = start;
        let mut seq = PackedSeq::with_capacity(len);
        let mut edits = 0;
        while seq.len() < len {
            let remaining = len - seq.len();
            let roll: f64 = rng.gen();
            if roll < cfg.indel_rate / 2.0 {
                seq.push(Base::from_code(rng.gen_range(0..4)));
                edits += 1;
                continue;
            }
            if roll < cfg.indel_rate && pos + remaining < reference.len() {
                pos += 1;
                edits += 1;
                continue;
            }
            let mut b = reference.get(pos);
            pos += 1;
            if rng.gen::<f64>() < cfg.sub_rate {
                b = Base::from_code((b.code() + rng.gen_range(1..4)) % 4);
                edits += 1;
            }
            seq.push(b);
        }
        reads.push(SimulatedRead {
            id: format!("read{i}"),
            seq,
            true_start: start,
            edits_applied: edits,
        });
    }
    Ok(reads)
}
