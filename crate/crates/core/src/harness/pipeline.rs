use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use indexmap::IndexMap;

use crate::candgen::{
    build_kmer_index, generate_candidates, simulate_reads, CandidateSet, KmerIndex, ReadSimConfig,
};
use crate::myers::{self, default_threshold, edit_distance_dp, MyersCpu};
use crate::seq::{parse_fasta, PackedSeq};
use crate::sim::{CoreState, CycleReport, DEVICE_COLUMNS};

use super::{Backend, HarnessError, RunConfig, SimColumns};

/// End-to-end phases, in execution order.
pub const PHASES: [&str; 8] = [
    "initialize read params",
    "allocate on shared DRAM",
    "initialize parameters",
    "initialize peq array",
    "copy data host to device",
    "kernel",
    "copy data device to host",
    "free allocated memory",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub id: String,
    pub seq: PackedSeq,
    pub true_start: Option<usize>,
    pub edits: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct Inputs {
    pub reference: PackedSeq,
    pub index: KmerIndex,
    pub queries: Vec<Query>,
}

/// Wall-clock and device cost of one phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseCost {
    pub ns: u64,
    pub cycles: u64,
    pub bytes: u64,
}

pub type PhaseTable = IndexMap<&'static str, PhaseCost>;

pub fn empty_phases() -> PhaseTable {
    PHASES.iter().map(|&p| (p, PhaseCost::default())).collect()
}

pub fn add_phases(into: &mut PhaseTable, from: &PhaseTable) {
    for (k, v) in from {
        let e = into.entry(k).or_default();
        e.ns += v.ns;
        e.cycles += v.cycles;
        e.bytes += v.bytes;
    }
}

#[derive(Debug, Clone)]
pub struct Scored {
    pub scores: Vec<u32>,
    pub kernel: Option<CycleReport>,
    pub staged_bytes: u64,
    pub phases: PhaseTable,
}

fn data<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> HarnessError {
    move |e| HarnessError::Data(format!("{context}: {e}"))
}

fn open(path: &Path) -> Result<BufReader<File>, HarnessError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(data(format!("cannot open {}", path.display())))
}

/// Reads the reference FASTA, concatenating its records.
pub fn load_reference(cfg: &RunConfig) -> Result<PackedSeq, HarnessError> {
    let path = cfg
        .reference
        .as_ref()
        .ok_or_else(|| HarnessError::Usage("--reference is required".into()))?;
    let records = parse_fasta(open(path)?, cfg.n_policy).map_err(data(path.display()))?;
    let mut seq = PackedSeq::new();
    for r in records {
        for b in r.seq.iter() {
            seq.push(b);
        }
    }
    if seq.is_empty() {
        return Err(HarnessError::Data(format!("{}: reference is empty", path.display())));
    }
    Ok(seq)
}

/// Loads the index named in the config, or builds one.
pub fn load_index(cfg: &RunConfig, reference: &PackedSeq) -> Result<KmerIndex, HarnessError> {
    match &cfg.index {
        Some(path) if path.exists() => {
            let idx = KmerIndex::read_from(open(path)?).map_err(data(path.display()))?;
            if idx.ref_len() != reference.len() {
                return Err(HarnessError::Data(format!(
                    "{}: index was built for a reference of length {}, got {}",
                    path.display(),
                    idx.ref_len(),
                    reference.len()
                )));
            }
            Ok(idx)
        }
        Some(path) => Err(HarnessError::Data(format!("index {} does not exist", path.display()))),
        None => build_kmer_index(reference, cfg.k, cfg.max_occ).map_err(data("building index")),
    }
}

pub fn read_sim_config(cfg: &RunConfig) -> ReadSimConfig {
    ReadSimConfig {
        count: cfg.num_reads,
        length: cfg.read_len,
        sub_rate: cfg.sub_rate,
        indel_rate: cfg.indel_rate,
        seed: cfg.seed,
    }
}

/// Queries from `--reads`, or simulated from the reference.
pub fn load_queries(cfg: &RunConfig, reference: &PackedSeq) -> Result<Vec<Query>, HarnessError> {
    if let Some(path) = &cfg.reads {
        let records = parse_fasta(open(path)?, cfg.n_policy).map_err(data(path.display()))?;
        return Ok(records
            .into_iter()
            .map(|r| Query {
                id: r.id,
                seq: r.seq,
                true_start: None,
                edits: None,
            })
            .collect());
    }
    let reads = simulate_reads(reference, &read_sim_config(cfg)).map_err(data("simulating reads"))?;
    Ok(reads
        .into_iter()
        .map(|r| Query {
            id: r.id,
            seq: r.seq,
            true_start: Some(r.true_start),
            edits: Some(r.edits_applied),
        })
        .collect())
}

pub fn prepare(cfg: &RunConfig) -> Result<Inputs, HarnessError> {
    cfg.validate()?;
    let reference = load_reference(cfg)?;
    let index = load_index(cfg, &reference)?;
    let queries = load_queries(cfg, &reference)?;
    Ok(Inputs {
        reference,
        index,
        queries,
    })
}

pub fn candidates_for(inputs: &Inputs, q: &Query, cap: usize) -> Result<CandidateSet, HarnessError> {
    generate_candidates(&q.id, &q.seq, &inputs.index, &inputs.reference, cap).map_err(data(format!("query {}", q.id)))
}

pub fn threshold_for(cfg: &RunConfig, m: usize) -> u32 {
    cfg.threshold.unwrap_or_else(|| default_threshold(m))
}

fn elapsed(t: Instant) -> u64 {
    t.elapsed().as_nanos() as u64
}

fn mark(phases: &mut PhaseTable, phase: &'static str, t: Instant) {
    phases[phase].ns += elapsed(t);
}

/// Columns of the simulated core for `count` candidates.
pub fn sim_columns(mode: SimColumns, count: usize) -> usize {
    match mode {
        SimColumns::Full => DEVICE_COLUMNS,
        SimColumns::Fit => count.div_ceil(64).max(1) * 64,
    }
}

/// Scores one candidate set on `backend`.
pub fn score_set(backend: Backend, cfg: &RunConfig, q: &Query, set: &CandidateSet) -> Result<Scored, HarnessError> {
    let ctx = || format!("query {}", q.id);
    let mut phases = empty_phases();
    let t = Instant::now();
    let windows: Vec<&PackedSeq> = set.entries.iter().map(|(_, w)| w).collect();
    mark(&mut phases, "initialize read params", t);
    match backend {
        Backend::Oracle => {
            let t = Instant::now();
            let scores = windows
                .iter()
                .map(|w| edit_distance_dp(&q.seq, w))
                .collect::<Result<_, _>>()
                .map_err(data(ctx()))?;
            mark(&mut phases, "kernel", t);
            Ok(Scored {
                scores,
                kernel: None,
                staged_bytes: 0,
                phases,
            })
        }
        Backend::Cpu => {
            let t = Instant::now();
            let mut scorer = MyersCpu::<u64>::new(&q.seq).map_err(data(ctx()))?;
            mark(&mut phases, "initialize peq array", t);
            let t = Instant::now();
            let scores = windows
                .iter()
                .map(|w| scorer.score(w))
                .collect::<Result<_, _>>()
                .map_err(data(ctx()))?;
            mark(&mut phases, "kernel", t);
            Ok(Scored {
                scores,
                kernel: None,
                staged_bytes: 0,
                phases,
            })
        }
        Backend::ApuSim => {
            if set.is_empty() {
                return Ok(Scored {
                    scores: Vec::new(),
                    kernel: None,
                    staged_bytes: 0,
                    phases,
                });
            }
            let t = Instant::now();
            let mut core = CoreState::with_columns(sim_columns(cfg.sim_columns, set.len()), cfg.cost)
                .map_err(data(ctx()))?;
            mark(&mut phases, "allocate on shared DRAM", t);
            let t = Instant::now();
            let layout = set.device_layout();
            mark(&mut phases, "initialize parameters", t);
            let t = Instant::now();
            let peq = myers::compute_peq(&q.seq);
            mark(&mut phases, "initialize peq array", t);
            let t = Instant::now();
            let dev = myers::stage_candidates(&mut core, &layout).map_err(data(ctx()))?;
            mark(&mut phases, "copy data host to device", t);
            phases["copy data host to device"].bytes = core.staged_bytes_in();
            let t = Instant::now();
            let report = myers::run_kernel(&mut core, &peq, &dev).map_err(data(ctx()))?;
            mark(&mut phases, "kernel", t);
            phases["kernel"].cycles = report.total_cycles;
            let t = Instant::now();
            let before = core.staged_bytes_out();
            let scores = myers::read_scores(&mut core, &dev);
            mark(&mut phases, "copy data device to host", t);
            phases["copy data device to host"].bytes = core.staged_bytes_out() - before;
            let t = Instant::now();
            myers::free_candidates(&mut core, dev).map_err(data(ctx()))?;
            drop(core);
            mark(&mut phases, "free allocated memory", t);
            let staged = phases["copy data host to device"].bytes + phases["copy data device to host"].bytes;
            Ok(Scored {
                scores: scores.into_iter().map(u32::from).collect(),
                kernel: Some(report),
                staged_bytes: staged,
                phases,
            })
        }
    }
}
