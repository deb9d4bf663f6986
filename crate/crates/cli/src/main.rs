use std::path::PathBuf;
use std::process::ExitCode;

use cimfilter::harness::{self, Backend, HarnessError, RunConfig, SimColumns};
use cimfilter::seq::NPolicy;
use clap::{Args, Parser, Subcommand};

/// Seed-location filtering on a simulated compute-in-SRAM processor.
#[derive(Parser, Debug)]
#[command(name = "cimfilter", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the k-mer index of a reference.
    Index(Opts),
    /// Simulate reads from a reference into reads.fa.
    Simulate(Opts),
    /// Generate candidate windows for each read.
    Candidates(Opts),
    /// Score and filter candidates on one backend.
    Filter(Opts),
    /// Compare scalar CPU time with simulator cycles per query.
    Bench(Opts),
    /// Render a cycles.json report as a section table.
    Report {
        /// Path to a cycles.json file.
        report: PathBuf,
        /// Where sections.csv is written.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Opts {
    /// Start from a key=value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reference FASTA; multiple records are concatenated.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Read FASTA; reads are simulated from the reference when absent.
    #[arg(long)]
    reads: Option<PathBuf>,
    /// Prebuilt index (read by filter/bench/candidates, written by index).
    #[arg(long)]
    index: Option<PathBuf>,
    /// k-mer length, 1..=15 [default: 10]
    #[arg(long)]
    k: Option<usize>,
    /// Drop k-mers occurring more often than this [default: 100000]
    #[arg(long)]
    max_occ: Option<usize>,
    /// Simulated read length [default: 300]
    #[arg(long)]
    read_len: Option<usize>,
    /// Number of simulated reads [default: 100]
    #[arg(long)]
    num_reads: Option<usize>,
    /// Per-base substitution rate of simulated reads [default: 0.005]
    #[arg(long)]
    sub_rate: Option<f64>,
    /// Per-base insertion/deletion rate of simulated reads [default: 0.001]
    #[arg(long)]
    indel_rate: Option<f64>,
    /// Maximum score kept; default ceil(0.10 * read length).
    #[arg(long)]
    threshold: Option<u32>,
    /// oracle | cpu | apu-sim [default: cpu]
    #[arg(long)]
    backend: Option<Backend>,
    /// Maximum candidates per read [default: 32768]
    #[arg(long)]
    cap: Option<usize>,
    /// Cycles per VMRF transfer [default: 16]
    #[arg(long)]
    vmrf_cost: Option<u64>,
    /// Cycles per DRAM to vector register load [default: 64]
    #[arg(long)]
    dram_cost: Option<u64>,
    /// Extra cycles per fragment issued [default: 3]
    #[arg(long)]
    fragment_overhead: Option<u64>,
    /// Read simulator seed [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: .]
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Timing repeats; the median is reported [default: 10].
    #[arg(long)]
    repeats: Option<usize>,
    /// reject | map-a: how N bases are handled [default: reject]
    #[arg(long)]
    n_policy: Option<NPolicy>,
    /// full | fit: simulated core width per query [default: fit]
    #[arg(long)]
    sim_columns: Option<SimColumns>,
    /// Also sweep candidate caps 800..=1800 (bench).
    #[arg(long)]
    sweep: bool,
}

impl Opts {
    fn into_config(self) -> Result<RunConfig, HarnessError> {
        let mut c = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| HarnessError::Data(format!("{}: {e}", p.display())))?;
                RunConfig::from_kv(&text)?
            }
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {$(
                if let Some(v) = self.$field { $target = v; }
            )*};
        }
        set! {
            k => c.k,
            max_occ => c.max_occ,
            read_len => c.read_len,
            num_reads => c.num_reads,
            sub_rate => c.sub_rate,
            indel_rate => c.indel_rate,
            backend => c.backend,
            cap => c.cap,
            vmrf_cost => c.cost.vmrf_cost,
            dram_cost => c.cost.dram_vr_cost,
            fragment_overhead => c.cost.fragment_overhead,
            seed => c.seed,
            out_dir => c.out_dir,
            repeats => c.repeats,
            n_policy => c.n_policy,
            sim_columns => c.sim_columns,
        }
        if self.reference.is_some() {
            c.reference = self.reference;
        }
        if self.reads.is_some() {
            c.reads = self.reads;
        }
        if self.index.is_some() {
            c.index = self.index;
        }
        if self.threshold.is_some() {
            c.threshold = self.threshold;
        }
        c.sweep |= self.sweep;
        c.validate()?;
        Ok(c)
    }
}

fn run(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Index(o) => {
            let s = harness::cmd_index(&o.into_config()?)?;
            println!(
                "wrote {}: {} k-mers, {} positions, {} dropped",
                s.path.display(),
                s.kmers,
                s.positions,
                s.dropped
            );
        }
        Command::Simulate(o) => {
            let path = harness::cmd_simulate(&o.into_config()?)?;
            println!("wrote {}", path.display());
        }
        Command::Candidates(o) => {
            let cfg = o.into_config()?;
            let sets = harness::cmd_candidates(&cfg)?;
            let total: usize = sets.iter().map(|s| s.len()).sum();
            println!(
                "{} queries, {} candidates; wrote {}",
                sets.len(),
                total,
                cfg.out_dir.join("candidates.tsv").display()
            );
        }
        Command::Filter(o) => {
            let cfg = o.into_config()?;
            let out = harness::cmd_filter(&cfg)?;
            let kept = out.verdicts.iter().filter(|v| v.kept).count();
            println!(
                "{} candidates scored on {}, {} kept; wrote {}",
                out.verdicts.len(),
                cfg.backend,
                kept,
                cfg.out_dir.join("verdicts.tsv").display()
            );
            if let Some(k) = out.kernel {
                println!("kernel cycles: {}", k.total_cycles);
            }
        }
        Command::Bench(o) => {
            let cfg = o.into_config()?;
            let r = harness::cmd_bench(&cfg)?;
            println!("{} queries; wrote {}", r.rows.len(), cfg.out_dir.join("bench.tsv").display());
        }
        Command::Report { report, out_dir } => {
            print!("{}", harness::cmd_report(&report, &out_dir)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
