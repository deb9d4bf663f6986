use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::candgen::{build_kmer_index, simulate_reads, CandidateSet, DeviceLayout, KmerIndex};
use crate::myers::{filter_candidates, FilterVerdict, MyersCpu, KERNEL_SECTIONS, VERDICT_HEADER};
use crate::seq::write_fasta;
use crate::sim::CycleReport;

use super::pipeline::{
    add_phases, candidates_for, empty_phases, load_reference, prepare, read_sim_config, score_set, threshold_for,
    PhaseTable,
};
use super::{Backend, HarnessError, RunConfig};

pub const SWEEP_CAPS: [usize; 6] = [800, 1000, 1200, 1400, 1600, 1800];
pub const HISTOGRAM_BINS: usize = 16;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Data(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, HarnessError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
    }
    fs::File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    let mut f = create(path)?;
    f.write_all(contents.as_bytes()).map_err(io_err(path))?;
    f.flush().map_err(io_err(path))
}

fn first_error<T>(results: Vec<Result<T, HarnessError>>) -> Result<Vec<T>, HarnessError> {
    results.into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct IndexSummary {
    pub path: PathBuf,
    pub kmers: usize,
    pub positions: usize,
    pub dropped: usize,
}

/// Builds the k-mer index and writes it to `--index`, or
/// `<out-dir>/index.kidx`.
pub fn cmd_index(cfg: &RunConfig) -> Result<IndexSummary, HarnessError> {
    cfg.validate()?;
    let reference = load_reference(cfg)?;
    let idx = build_kmer_index(&reference, cfg.k, cfg.max_occ)
        .map_err(|e| HarnessError::Data(format!("building index: {e}")))?;
    let path = cfg.index.clone().unwrap_or_else(|| cfg.out_dir.join("index.kidx"));
    let f = create(&path)?;
    idx.write_to(f).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
    Ok(IndexSummary {
        path,
        kmers: idx.len(),
        positions: idx.total_positions(),
        dropped: idx.dropped(),
    })
}

/// Writes simulated reads to `<out-dir>/reads.fa`. Headers carry the true
/// start and the number of edits applied.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<PathBuf, HarnessError> {
    cfg.validate()?;
    let reference = load_reference(cfg)?;
    let reads = simulate_reads(&reference, &read_sim_config(cfg))
        .map_err(|e| HarnessError::Data(format!("simulating reads: {e}")))?;
    let path = cfg.out_dir.join("reads.fa");
    let mut f = create(&path)?;
    for r in &reads {
        let header = format!("{} start={} edits={}", r.id, r.true_start, r.edits_applied);
        write_fasta(&mut f, &header, &r.seq).map_err(io_err(&path))?;
    }
    f.flush().map_err(io_err(&path))?;
    Ok(path)
}

const CANDIDATE_MAGIC: &[u8; 8] = b"CIMFCAND";

/// Writes `candidates.tsv` and the device layouts in `candidates.bin`.
pub fn cmd_candidates(cfg: &RunConfig) -> Result<Vec<CandidateSet>, HarnessError> {
    let inputs = prepare(cfg)?;
    let sets = first_error(crate::par::map_ordered(&inputs.queries, |q| {
        candidates_for(&inputs, q, cfg.cap)
    }))?;
    let tsv = cfg.out_dir.join("candidates.tsv");
    let mut f = create(&tsv)?;
    writeln!(f, "query_id\tref_start\twindow").map_err(io_err(&tsv))?;
    for s in &sets {
        s.write_tsv(&mut f).map_err(io_err(&tsv))?;
    }
    f.flush().map_err(io_err(&tsv))?;
    let bin = cfg.out_dir.join("candidates.bin");
    let mut f = create(&bin)?;
    write_layouts(&mut f, &sets).map_err(io_err(&bin))?;
    f.flush().map_err(io_err(&bin))?;
    Ok(sets)
}

/// Per set: id, m, n, count, starts, then the transposed words.
pub fn write_layouts<W: Write>(mut w: W, sets: &[CandidateSet]) -> std::io::Result<()> {
    w.write_all(CANDIDATE_MAGIC)?;
    w.write_all(&(sets.len() as u64).to_le_bytes())?;
    for s in sets {
        w.write_all(&(s.query_id.len() as u32).to_le_bytes())?;
        w.write_all(s.query_id.as_bytes())?;
        for v in [s.m, s.n, s.len()] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        for (start, _) in &s.entries {
            w.write_all(&(*start as u64).to_le_bytes())?;
        }
        w.write_all(&s.device_layout().to_le_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredLayout {
    pub query_id: String,
    pub m: usize,
    pub starts: Vec<usize>,
    pub layout: DeviceLayout,
}

pub fn read_layouts<R: Read>(mut r: R) -> Result<Vec<StoredLayout>, HarnessError> {
    let bad = |m: &str| HarnessError::Data(format!("malformed candidate file: {m}"));
    let mut read = |n: usize| -> Result<Vec<u8>, HarnessError> {
        let mut b = vec![0u8; n];
        r.read_exact(&mut b).map_err(|_| bad("truncated"))?;
        Ok(b)
    };
    if read(8)? != CANDIDATE_MAGIC {
        return Err(bad("bad magic bytes"));
    }
    let u64_at = |b: &[u8]| u64::from_le_bytes(b.try_into().expect("8 bytes")) as usize;
    let sets = u64_at(&read(8)?);
    let mut out = Vec::new();
    for _ in 0..sets {
        let id_len = u32::from_le_bytes(read(4)?.try_into().expect("4 bytes")) as usize;
        let query_id = String::from_utf8(read(id_len)?).map_err(|_| bad("id is not utf-8"))?;
        let (m, n, count) = (u64_at(&read(8)?), u64_at(&read(8)?), u64_at(&read(8)?));
        let starts = read(count * 8)?.chunks_exact(8).map(u64_at).collect();
        let bytes = read(crate::seq::words_for(n) * count * 2)?;
        let layout = DeviceLayout::from_le_bytes(n, count, &bytes).map_err(|e| bad(&e.to_string()))?;
        out.push(StoredLayout {
            query_id,
            m,
            starts,
            layout,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub verdicts: Vec<FilterVerdict>,
    /// Kernel cycles summed over all queries (apu-sim only).
    pub kernel: Option<CycleReport>,
    pub phases: PhaseTable,
}

/// Scores every query's candidates on the configured backend and writes
/// `verdicts.tsv` (plus `cycles.json` for the simulator).
pub fn cmd_filter(cfg: &RunConfig) -> Result<FilterOutcome, HarnessError> {
    let inputs = prepare(cfg)?;
    let results = first_error(crate::par::map_ordered(&inputs.queries, |q| {
        let set = candidates_for(&inputs, q, cfg.cap)?;
        let scored = score_set(cfg.backend, cfg, q, &set)?;
        let verdicts = filter_candidates(&q.id, &set.starts(), &scored.scores, threshold_for(cfg, set.m));
        Ok((verdicts, scored))
    }))?;

    let mut verdicts = Vec::new();
    let mut kernel: Option<CycleReport> = None;
    let mut phases = empty_phases();
    for (v, scored) in results {
        verdicts.extend(v);
        add_phases(&mut phases, &scored.phases);
        if let Some(r) = scored.kernel {
            match kernel.as_mut() {
                Some(k) => k.accumulate(&r),
                None => kernel = Some(r),
            }
        }
    }
    let mut tsv = String::from(VERDICT_HEADER);
    tsv.push('\n');
    for v in &verdicts {
        tsv.push_str(&v.tsv_row());
        tsv.push('\n');
    }
    write_file(&cfg.out_dir.join("verdicts.tsv"), &tsv)?;
    if cfg.backend == Backend::ApuSim {
        let mut report = kernel.clone().unwrap_or_else(|| CycleReport::empty(cfg.cost));
        report.run_config = Some(cfg.to_kv());
        write_file(&cfg.out_dir.join("cycles.json"), &report.to_json())?;
    }
    Ok(FilterOutcome {
        verdicts,
        kernel,
        phases,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub query_id: String,
    pub candidate_count: usize,
    pub cpu_ns: u64,
    pub sim_cycles: u64,
    pub staged_bytes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cap: usize,
    pub queries: usize,
    pub candidates: usize,
    pub mean_cpu_ns: f64,
    pub mean_sim_cycles: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramBin {
    pub lo: usize,
    pub hi: usize,
    pub queries: usize,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub sections: CycleReport,
    pub cpu_phases: PhaseTable,
    pub sim_phases: PhaseTable,
    pub histogram: Vec<HistogramBin>,
    pub sweep: Vec<SweepRow>,
}

fn median(mut v: Vec<u64>) -> u64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2
    }
}

/// Median wall-clock time of scoring `set` on the scalar backend.
fn time_cpu(q: &super::Query, set: &CandidateSet, repeats: usize) -> Result<u64, HarnessError> {
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t = Instant::now();
        let mut scorer = MyersCpu::<u64>::new(&q.seq).map_err(|e| HarnessError::Data(format!("query {}: {e}", q.id)))?;
        let mut acc = 0u32;
        for (_, w) in &set.entries {
            acc = acc.wrapping_add(scorer.score(w).map_err(|e| HarnessError::Data(format!("query {}: {e}", q.id)))?);
        }
        std::hint::black_box(acc);
        samples.push(t.elapsed().as_nanos() as u64);
    }
    Ok(median(samples))
}

/// Equal-width bins over `[0, max]` of candidates per query.
pub fn histogram(counts: &[usize], bins: usize) -> Vec<HistogramBin> {
    if counts.is_empty() {
        return Vec::new();
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    let width = (max + 1).div_ceil(bins).max(1);
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            lo: i * width,
            hi: (i + 1) * width - 1,
            queries: 0,
        })
        .collect();
    for &c in counts {
        out[c / width].queries += 1;
    }
    out
}

/// Per-query CPU time against simulator cycles, the candidate histogram,
/// end-to-end phase tables and optionally the candidate-cap sweep.
pub fn cmd_bench(cfg: &RunConfig) -> Result<BenchReport, HarnessError> {
    let inputs = prepare(cfg)?;
    let sets = first_error(crate::par::map_ordered(&inputs.queries, |q| {
        candidates_for(&inputs, q, cfg.cap)
    }))?;
    let pairs: Vec<(&super::Query, &CandidateSet)> = inputs.queries.iter().zip(&sets).collect();
    let sim = first_error(crate::par::map_ordered(&pairs, |(q, set)| {
        let sim = score_set(Backend::ApuSim, cfg, q, set)?;
        let cpu = score_set(Backend::Cpu, cfg, q, set)?;
        if sim.scores != cpu.scores {
            return Err(HarnessError::Data(format!("query {}: simulator and cpu scores disagree", q.id)));
        }
        Ok((sim, cpu.phases))
    }))?;

    // timing runs one query at a time so measurements do not compete
    let mut rows = Vec::with_capacity(pairs.len());
    let mut sections = CycleReport::empty(cfg.cost);
    let mut cpu_phases = empty_phases();
    let mut sim_phases = empty_phases();
    for ((q, set), (scored, cpu_ph)) in pairs.iter().zip(&sim) {
        let cpu_ns = time_cpu(q, set, cfg.repeats)?;
        add_phases(&mut cpu_phases, cpu_ph);
        add_phases(&mut sim_phases, &scored.phases);
        if let Some(k) = &scored.kernel {
            sections.accumulate(k);
        }
        rows.push(BenchRow {
            query_id: q.id.clone(),
            candidate_count: set.len(),
            cpu_ns,
            sim_cycles: scored.kernel.as_ref().map_or(0, |k| k.total_cycles),
            staged_bytes: scored.staged_bytes,
        });
    }

    let mut sweep = Vec::new();
    if cfg.sweep {
        for cap in SWEEP_CAPS {
            let mut total_ns = 0u64;
            let mut candidates = 0;
            for (q, set) in &pairs {
                let mut capped = (*set).clone();
                capped.truncate(cap);
                candidates += capped.len();
                total_ns += time_cpu(q, &capped, cfg.repeats)?;
            }
            // kernel cycles do not depend on the candidate count, so the
            // uncapped per-query cycles apply to every cap
            let total_cycles: u64 = rows.iter().map(|r| r.sim_cycles).sum();
            let n = pairs.len().max(1) as f64;
            sweep.push(SweepRow {
                cap,
                queries: pairs.len(),
                candidates,
                mean_cpu_ns: total_ns as f64 / n,
                mean_sim_cycles: total_cycles as f64 / n,
            });
        }
    }

    let counts: Vec<usize> = sets.iter().map(|s| s.len()).collect();
    let report = BenchReport {
        rows,
        sections,
        cpu_phases,
        sim_phases,
        histogram: histogram(&counts, HISTOGRAM_BINS),
        sweep,
    };
    write_bench_outputs(cfg, &report)?;
    Ok(report)
}

pub const BENCH_HEADER: &str = "query_id\tcandidate_count\tcpu_ns\tsim_cycles\tstaged_bytes";

fn write_bench_outputs(cfg: &RunConfig, r: &BenchReport) -> Result<(), HarnessError> {
    let mut bench = cfg.as_comment();
    bench.push_str(BENCH_HEADER);
    bench.push('\n');
    for row in &r.rows {
        bench.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            row.query_id, row.candidate_count, row.cpu_ns, row.sim_cycles, row.staged_bytes
        ));
    }
    write_file(&cfg.out_dir.join("bench.tsv"), &bench)?;

    let mut hist = String::from("bin_lo,bin_hi,queries\n");
    for b in &r.histogram {
        hist.push_str(&format!("{},{},{}\n", b.lo, b.hi, b.queries));
    }
    write_file(&cfg.out_dir.join("histogram.csv"), &hist)?;

    let mut phases = String::from("phase\tcpu_ns\tsim_ns\tsim_cycles\tsim_bytes\n");
    for (name, cpu) in &r.cpu_phases {
        let sim = r.sim_phases[name];
        phases.push_str(&format!("{name}\t{}\t{}\t{}\t{}\n", cpu.ns, sim.ns, sim.cycles, sim.bytes));
    }
    write_file(&cfg.out_dir.join("phases.tsv"), &phases)?;

    let mut cycles = r.sections.clone();
    cycles.run_config = Some(cfg.to_kv());
    write_file(&cfg.out_dir.join("cycles.json"), &cycles.to_json())?;

    if !r.sweep.is_empty() {
        let mut s = String::from("cap\tqueries\tcandidates\tmean_cpu_ns\tmean_sim_cycles\n");
        for row in &r.sweep {
            s.push_str(&format!(
                "{}\t{}\t{}\t{:.1}\t{:.1}\n",
                row.cap, row.queries, row.candidates, row.mean_cpu_ns, row.mean_sim_cycles
            ));
        }
        write_file(&cfg.out_dir.join("sweep.tsv"), &s)?;
    }
    Ok(())
}

/// Renders a cycle report as a table in kernel-section order and writes
/// `sections.csv` into `out_dir`.
pub fn cmd_report(report_path: &Path, out_dir: &Path) -> Result<String, HarnessError> {
    let text = fs::read_to_string(report_path).map_err(io_err(report_path))?;
    let report: CycleReport = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Data(format!("malformed report {}: {e}", report_path.display())))?;
    let rows = ordered_sections(&report);
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max("section".len());
    let mut table = format!("{:<width$}  {:>14}  {:>8}\n", "section", "cycles", "percent");
    let mut csv = String::from("section,cycles,percent\n");
    for r in &rows {
        table.push_str(&format!("{:<width$}  {:>14}  {:>8.1}\n", r.label, r.cycles, r.percent));
        csv.push_str(&format!("{},{},{:.4}\n", r.label, r.cycles, r.percent));
    }
    table.push_str(&format!("{:<width$}  {:>14}  {:>8.1}\n", "total", report.total_cycles, 100.0));
    write_file(&out_dir.join("sections.csv"), &csv)?;
    Ok(table)
}

/// Sections in kernel order, with any unknown labels after.
pub fn ordered_sections(report: &CycleReport) -> Vec<crate::sim::SectionRow> {
    let mut rows: Vec<_> = report.sections.clone();
    rows.sort_by_key(|r| KERNEL_SECTIONS.iter().position(|&l| l == r.label).unwrap_or(usize::MAX));
    rows
}

/// Loads an index file on its own, for inspection.
pub fn read_index(path: &Path) -> Result<KmerIndex, HarnessError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    KmerIndex::read_from(std::io::BufReader::new(f)).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
}
