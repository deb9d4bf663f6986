//! Candidate scoring over a batch of queries: rayon pool against the
//! sequential fallback, on the scalar and simulated backends.

use cimfilter::candgen::transpose_candidates;
use cimfilter::myers::{myers_apu_kernel, MyersCpu};
use cimfilter::par::{map_ordered, map_sequential};
use cimfilter::seq::{Base, PackedSeq};
use cimfilter::sim::{CoreState, CostModel};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Job {
    query: PackedSeq,
    cands: Vec<PackedSeq>,
}

fn random_seq(rng: &mut ChaCha8Rng, len: usize) -> PackedSeq {
    PackedSeq::from_bases((0..len).map(|_| Base::from_code(rng.gen_range(0..4))))
}

fn jobs(queries: usize, m: usize, per_query: usize) -> Vec<Job> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = m + (15 * m).div_ceil(100);
    (0..queries)
        .map(|_| Job {
            query: random_seq(&mut rng, m),
            cands: (0..per_query).map(|_| random_seq(&mut rng, n)).collect(),
        })
        .collect()
}

fn cpu_job(job: &Job) -> u64 {
    let mut scorer = MyersCpu::<u64>::new(&job.query).unwrap();
    job.cands.iter().map(|c| u64::from(scorer.score(c).unwrap())).sum()
}

fn sim_job(job: &Job) -> u64 {
    let n = job.cands[0].len();
    let layout = transpose_candidates(&job.cands, n).unwrap();
    let mut core = CoreState::with_columns(job.cands.len().div_ceil(64) * 64, CostModel::default()).unwrap();
    let out = myers_apu_kernel(&mut core, &job.query, &layout).unwrap();
    out.scores.iter().map(|&s| u64::from(s)).sum()
}

fn bench_cpu(c: &mut Criterion) {
    let batch = jobs(32, 150, 1000);
    let mut g = c.benchmark_group("cpu_scoring");
    g.throughput(Throughput::Elements(32 * 1000));
    g.bench_function(BenchmarkId::new("sequential", "32x1000"), |b| {
        b.iter(|| map_sequential(&batch, cpu_job))
    });
    g.bench_function(BenchmarkId::new("parallel", "32x1000"), |b| {
        b.iter(|| map_ordered(&batch, cpu_job))
    });
    g.finish();
}

fn bench_sim(c: &mut Criterion) {
    let batch = jobs(16, 48, 128);
    let mut g = c.benchmark_group("sim_scoring");
    g.sample_size(10);
    g.throughput(Throughput::Elements(16));
    g.bench_function(BenchmarkId::new("sequential", "16 queries"), |b| {
        b.iter(|| map_sequential(&batch, sim_job))
    });
    g.bench_function(BenchmarkId::new("parallel", "16 queries"), |b| {
        b.iter(|| map_ordered(&batch, sim_job))
    });
    g.finish();
}

criterion_group!(benches, bench_cpu, bench_sim);
criterion_main!(benches);
