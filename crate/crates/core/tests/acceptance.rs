//! Acceptance checks AC1..AC10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fail.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use cimfilter::candgen::{
    build_kmer_index, candidate_len, generate_candidates, simulate_reads, transpose_candidates, untranspose,
    DeviceLayout, ReadSimConfig,
};
use cimfilter::harness::{cmd_bench, cmd_filter, Backend, RunConfig, SimColumns};
use cimfilter::myers::{
    compute_peq, edit_distance_dp, kernel_cycles, myers_apu_kernel, myers_cpu, run_kernel, stage_candidates,
    MyersCpu, WordWidth, SECTION_EQ, SECTION_XH,
};
use cimfilter::par::map_ordered;
use cimfilter::seq::{pack_seq, unpack_seq, write_fasta, Base, PackedSeq};
use cimfilter::sim::{
    CoreState, CostModel, Fragment, Lane, MicroOp, Reg, SliceMask, Source, DEVICE_COLUMNS, MASK_REG,
};
use cimfilter::ucode::{self, AdderKind, BitwiseOp, CarryIn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn random_seq(rng: &mut ChaCha8Rng, len: usize) -> PackedSeq {
    PackedSeq::from_bases((0..len).map(|_| Base::from_code(rng.gen_range(0..4))))
}

fn ac1_triple_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC1);
    let pairs: Vec<(u64, usize, usize)> = (0..1000)
        .map(|i| {
            let m = rng.gen_range(1..=200);
            (i, m, rng.gen_range(m..=2 * m))
        })
        .collect();
    let results = map_ordered(&pairs, |&(i, m, n)| -> Check {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0000 + i);
        let q = random_seq(&mut rng, m);
        // the pair under test fills column 0; the other columns are
        // same-length fillers checked against the scalar scorer
        let cands: Vec<PackedSeq> = (0..64).map(|_| random_seq(&mut rng, n)).collect();
        let dp = edit_distance_dp(&q, &cands[0]).map_err(|e| e.to_string())?;
        for w in WordWidth::ALL {
            let s = myers_cpu(&q, &cands[0], w).map_err(|e| e.to_string())?;
            ensure!(s == dp, "pair {i} (m={m}, n={n}): w={w} gave {s}, dp {dp}");
        }
        let mut core = CoreState::with_columns(64, CostModel::default()).map_err(|e| e.to_string())?;
        let layout = transpose_candidates(&cands, n).map_err(|e| e.to_string())?;
        let out = myers_apu_kernel(&mut core, &q, &layout).map_err(|e| e.to_string())?;
        ensure!(u32::from(out.scores[0]) == dp, "pair {i} (m={m}, n={n}): kernel {} dp {dp}", out.scores[0]);
        let mut cpu = MyersCpu::<u64>::new(&q).map_err(|e| e.to_string())?;
        for (c, cand) in cands.iter().enumerate().skip(1) {
            let want = cpu.score(cand).map_err(|e| e.to_string())?;
            ensure!(u32::from(out.scores[c]) == want, "pair {i} filler column {c}: kernel {} cpu {want}", out.scores[c]);
        }
        Ok(String::new())
    });
    for r in results {
        r?;
    }
    Ok("1000 pairs agree on dp, w=16/32/64 and the kernel (plus 63000 filler columns)".into())
}

fn write_random_reference(path: &Path, len: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seq = random_seq(&mut rng, len);
    let mut f = fs::File::create(path).unwrap();
    write_fasta(&mut f, "chrA", &seq).unwrap();
}

fn desk_config(reference: &Path, out_dir: &Path) -> RunConfig {
    RunConfig {
        reference: Some(reference.to_path_buf()),
        read_len: 300,
        num_reads: 100,
        cap: 32_768,
        sim_columns: SimColumns::Fit,
        out_dir: out_dir.to_path_buf(),
        ..RunConfig::default()
    }
}

fn ac2_desk_run(reference: &Path, dir: &Path) -> Check {
    let mut files = Vec::new();
    let mut candidates = 0;
    for backend in Backend::ALL {
        let out = dir.join(backend.to_string());
        fs::create_dir_all(&out).unwrap();
        let cfg = RunConfig {
            backend,
            ..desk_config(reference, &out)
        };
        let outcome = cmd_filter(&cfg).map_err(|e| format!("{backend}: {e}"))?;
        candidates = outcome.verdicts.len();
        files.push(fs::read(out.join("verdicts.tsv")).unwrap());
    }
    ensure!(files[0] == files[1], "oracle and cpu verdicts differ");
    ensure!(files[0] == files[2], "oracle and apu-sim verdicts differ");
    Ok(format!("100 reads x 300 bp, {candidates} candidates, identical verdicts.tsv on all backends"))
}

fn ac3_ripple_adder() -> Check {
    const COLS: usize = DEVICE_COLUMNS;
    let (a, b, d) = (Reg::fixed(0), Reg::fixed(1), Reg::fixed(2));
    let (cin, cout) = (Lane::fixed(3), Lane::fixed(0));
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC3);
    let edges = [0u16, 1, 0x7FFF, 0x8000, 0xFFFF];
    let mut pairs: Vec<(u16, u16)> = edges.iter().flat_map(|&x| edges.iter().map(move |&y| (x, y))).collect();
    pairs.extend((0..100_000).map(|_| (rng.gen::<u16>(), rng.gen::<u16>())));
    let mut checked = 0;
    for with_cin in [false, true] {
        for batch in pairs.chunks(COLS / 2) {
            // each pair runs once with carry-in 0 and once with 1
            let mut xs = Vec::with_capacity(COLS);
            let mut ys = Vec::with_capacity(COLS);
            let mut cs = Vec::with_capacity(COLS);
            for &(x, y) in batch {
                for c in [false, true] {
                    xs.push(x);
                    ys.push(y);
                    cs.push(with_cin && c);
                }
            }
            xs.resize(COLS, 0);
            ys.resize(COLS, 0);
            cs.resize(COLS, false);
            let mut core = CoreState::new(CostModel::default());
            core.poke_vr(a, &xs);
            core.poke_vr(b, &ys);
            core.poke_lane(cin, &cs);
            ucode::vadd_vv(&mut core, AdderKind::Ripple, d, a, b, with_cin.then_some(cin), cout)
                .map_err(|e| e.to_string())?;
            let sum = core.peek_vr(d);
            let carry = core.peek_lane(cout);
            for c in 0..batch.len() * 2 {
                let full = u32::from(xs[c]) + u32::from(ys[c]) + u32::from(cs[c]);
                ensure!(
                    sum[c] == full as u16 && carry[c] == (full >> 16 == 1),
                    "{:#06x} + {:#06x} + {} gave {:#06x} carry {}",
                    xs[c],
                    ys[c],
                    u8::from(cs[c]),
                    sum[c],
                    carry[c]
                );
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} additions match the 17-bit oracle"))
}

fn golden_fragments() -> Vec<(&'static str, Fragment)> {
    let (d, a, b) = (Reg::fixed(2), Reg::fixed(0), Reg::fixed(1));
    let (l0, l1, l4) = (Lane::fixed(0), Lane::fixed(1), Lane::fixed(4));
    vec![
        ("vor_vv", ucode::bitwise_frag(BitwiseOp::Or, d, a, b)),
        ("vand_vv", ucode::bitwise_frag(BitwiseOp::And, d, a, b)),
        ("vxor_vv", ucode::bitwise_frag(BitwiseOp::Xor, d, a, b)),
        ("vnot_v", ucode::bitwise_frag(BitwiseOp::Not, d, a, b)),
        ("vor_not_vv", ucode::bitwise_frag(BitwiseOp::OrNot, d, a, b)),
        ("vand_not_vv", ucode::bitwise_frag(BitwiseOp::AndNot, d, a, b)),
        ("vmv_vx", ucode::vmv_vx_frag(d, 7)),
        ("vmseq", ucode::vmseq_frag(a, 3, l4, SliceMask(0b11))),
        ("or_scalar_where", ucode::or_scalar_where_frag(d, 1, l4)),
        (
            "vadd_carry_select",
            ucode::adder_frag(AdderKind::CarrySelect, d, a, b, CarryIn::Lane(l0), l0, false, false),
        ),
        (
            "vsub_carry_select",
            ucode::adder_frag(AdderKind::CarrySelect, d, a, b, CarryIn::One, l0, true, true),
        ),
        ("vlt_carry_select", ucode::vlt_frag(AdderKind::CarrySelect, a, b, l0)),
        (
            "vadd_ripple",
            ucode::adder_frag(AdderKind::Ripple, d, a, b, CarryIn::Zero, l0, false, false),
        ),
        (
            "vadd_ripple_aliased",
            ucode::adder_frag(AdderKind::Ripple, a, a, b, CarryIn::Zero, l0, false, false),
        ),
        (
            "vsub_ripple",
            ucode::adder_frag(AdderKind::Ripple, d, a, b, CarryIn::One, l0, true, true),
        ),
        ("lsl_with_carry", ucode::lsl_with_carry_frag(d, Some(l1), l1)),
        ("save_last_bit", ucode::save_last_bit_frag(l1)),
        ("extract_bit", ucode::extract_bit_frag(d, 3, l1)),
        ("mask_to_01", ucode::mask_to_01_frag(l1, d)),
        ("broadcast_bit", ucode::broadcast_bit_frag(l1, d)),
        ("vcopy_masked", ucode::vcopy_masked_frag(d, a, l1)),
    ]
}

fn ac4_fragment_costs() -> Check {
    let mut core = CoreState::new(CostModel::default());
    let before = core.microops_executed();
    ucode::vmv_vx(&mut core, Reg::fixed(0), 0xBEEF).map_err(|e| e.to_string())?;
    let vmv = core.microops_executed() - before;
    ensure!(vmv == 3, "vmv_vx took {vmv} micro-ops");
    let before = core.microops_executed();
    ucode::vmseq(&mut core, Reg::fixed(0), 0xBEEF, Lane::fixed(4), SliceMask::ALL).map_err(|e| e.to_string())?;
    let vmseq = core.microops_executed() - before;
    ensure!(vmseq == 4, "full-width vmseq took {vmseq} micro-ops");

    let table = include_str!("golden/fragment_costs.tsv");
    let rows: Vec<Vec<&str>> = table
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split('\t').collect())
        .collect();
    let frags = golden_fragments();
    ensure!(rows.len() == frags.len(), "golden table has {} rows, expected {}", rows.len(), frags.len());
    for (row, (name, frag)) in rows.iter().zip(&frags) {
        ensure!(row[0] == *name, "golden row {} out of order (expected {name})", row[0]);
        let mut core = CoreState::with_columns(64, CostModel::default()).unwrap();
        core.run_fragment(frag).map_err(|e| e.to_string())?;
        let (ops, cycles) = (frag.len().to_string(), core.cycles().to_string());
        ensure!(row[1] == ops && row[2] == cycles, "{name}: {ops} ops/{cycles} cycles, golden {}/{}", row[1], row[2]);
    }
    Ok(format!("vmv_vx = 3, vmseq = 4, {} golden fragment costs unchanged", frags.len()))
}

fn ac5_parallel_touch() -> Check {
    let mut core = CoreState::new(CostModel::default());
    core.exec_microop(&MicroOp::rl(SliceMask::ALL, Source::vr(MASK_REG)))
        .map_err(|e| e.to_string())?;
    let touched = core.bits_touched();
    ensure!(touched == 524_288, "touched {touched} bits");
    Ok(format!("{touched} bit positions in one micro-op"))
}

/// Runs the m=300, n=345 kernel on the full device with `count` candidates.
fn full_device_kernel(count: usize) -> Result<(cimfilter::sim::CycleReport, Vec<u16>, Vec<PackedSeq>, PackedSeq), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC6);
    let q = random_seq(&mut rng, 300);
    let n = candidate_len(300);
    let cands: Vec<PackedSeq> = (0..count).map(|_| random_seq(&mut rng, n)).collect();
    let layout: DeviceLayout = transpose_candidates(&cands, n).map_err(|e| e.to_string())?;
    let mut core = CoreState::new(CostModel::default());
    let dev = stage_candidates(&mut core, &layout).map_err(|e| e.to_string())?;
    let report = run_kernel(&mut core, &compute_peq(&q), &dev).map_err(|e| e.to_string())?;
    let scores = cimfilter::myers::read_scores(&mut core, &dev);
    Ok((report, scores, cands, q))
}

fn ac6_ac7_kernel() -> (Check, Check) {
    let one = full_device_kernel(1);
    let all = full_device_kernel(DEVICE_COLUMNS);
    let (one, all) = match (one, all) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return (Err(e.clone()), Err(e)),
    };
    let ac6 = (|| {
        let n = candidate_len(300);
        ensure!(n == 345, "candidate length {n}");
        let (c1, c2) = (one.0.total_cycles, all.0.total_cycles);
        ensure!(c1 == c2, "1 candidate: {c1} cycles, 32768 candidates: {c2}");
        let model = kernel_cycles(300, 345, CostModel::default());
        ensure!(c1 == model, "measured {c1}, closed form {model}");
        let (_, scores, cands, q) = &all;
        let mut cpu = MyersCpu::<u64>::new(q).unwrap();
        for c in (0..DEVICE_COLUMNS).step_by(97) {
            ensure!(u32::from(scores[c]) == cpu.score(&cands[c]).unwrap(), "column {c} score differs from cpu");
        }
        Ok(format!("{c1} kernel cycles for 1 and for 32768 candidates"))
    })();
    let ac7 = (|| {
        let mut rows = all.0.sections.clone();
        rows.sort_by_key(|r| std::cmp::Reverse(r.cycles));
        let rank = |label: &str| rows.iter().position(|r| r.label == label);
        let eq = rank(SECTION_EQ);
        let xh = rank(SECTION_XH);
        ensure!(eq == Some(0), "computing eq ranked {eq:?}");
        ensure!(xh.is_some_and(|r| r < 3), "computing Xh ranked {xh:?}");
        Ok(format!(
            "eq {:.1}%, Xh {:.1}% (rank {})",
            rows[0].percent,
            rows[xh.unwrap()].percent,
            xh.unwrap() + 1
        ))
    })();
    (ac6, ac7)
}

fn ac8_recall(reference_path: &Path) -> Check {
    let text = fs::read_to_string(reference_path).unwrap();
    let reference = pack_seq(&text.lines().skip(1).collect::<String>()).map_err(|e| e.to_string())?;
    let index = build_kmer_index(&reference, 10, 100_000).map_err(|e| e.to_string())?;
    let reads = simulate_reads(
        &reference,
        &ReadSimConfig {
            count: 200,
            length: 300,
            sub_rate: 0.005,
            indel_rate: 0.001,
            seed: 0xAC8,
        },
    )
    .map_err(|e| e.to_string())?;
    let hits = map_ordered(&reads, |r| -> Result<bool, String> {
        let set = generate_candidates(&r.id, &r.seq, &index, &reference, 32_768).map_err(|e| e.to_string())?;
        let mut cpu = MyersCpu::<u64>::new(&r.seq).map_err(|e| e.to_string())?;
        let mut best: Option<(u32, &PackedSeq)> = None;
        for (_, w) in &set.entries {
            let s = cpu.score(w).map_err(|e| e.to_string())?;
            if best.is_none_or(|(b, _)| s < b) {
                best = Some((s, w));
            }
        }
        Ok(match best {
            Some((_, w)) => edit_distance_dp(&r.seq, w).map_err(|e| e.to_string())? <= r.edits_applied,
            None => false,
        })
    });
    let mut found = 0;
    for h in hits {
        found += usize::from(h?);
    }
    let recall = found as f64 / reads.len() as f64;
    ensure!(recall >= 0.95, "recall {:.1}% ({found}/{})", recall * 100.0, reads.len());
    Ok(format!("recall {:.1}% ({found}/{})", recall * 100.0, reads.len()))
}

fn ac9_roundtrips() -> Check {
    for w in 0..=u16::MAX {
        let seq = PackedSeq::from_words(8, vec![w]).map_err(|e| e.to_string())?;
        let text = unpack_seq(&seq);
        let back = pack_seq(&text).map_err(|e| e.to_string())?;
        ensure!(back.words() == [w] && back == seq, "word {w:#06x} did not roundtrip");
        let bytes = seq.to_le_bytes();
        ensure!(PackedSeq::from_le_bytes(8, &bytes).unwrap() == seq, "word {w:#06x} byte roundtrip");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC9);
    for i in 0..1000 {
        let n = rng.gen_range(1..=400);
        let count = rng.gen_range(1..=300);
        let cands: Vec<PackedSeq> = (0..count).map(|_| random_seq(&mut rng, n)).collect();
        let layout = transpose_candidates(&cands, n).map_err(|e| e.to_string())?;
        ensure!(untranspose(&layout) == cands, "set {i} (n={n}, count={count}) did not untranspose");
        let bytes = layout.to_le_bytes();
        let back = DeviceLayout::from_le_bytes(n, count, &bytes).map_err(|e| e.to_string())?;
        ensure!(back == layout, "set {i} layout bytes did not roundtrip");
    }
    Ok("65536 single-word sequences and 1000 candidate sets roundtrip".into())
}

/// Bench rows with the wall-clock column (`cpu_ns`) removed.
fn bench_rows_without_timing(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let mut f: Vec<&str> = l.split('\t').collect();
            f.remove(2);
            f.join("\t") + "\n"
        })
        .collect()
}

fn ac10_determinism(reference: &Path, dir: &Path) -> Check {
    let out = dir.join("determinism");
    fs::create_dir_all(&out).unwrap();
    let base = RunConfig {
        num_reads: 20,
        repeats: 1,
        seed: 7,
        ..desk_config(reference, &out)
    };
    let mut runs = Vec::new();
    for _ in 0..2 {
        let mut files = Vec::new();
        for backend in [Backend::Cpu, Backend::ApuSim] {
            cmd_filter(&RunConfig { backend, ..base.clone() }).map_err(|e| e.to_string())?;
            files.push(fs::read(out.join("verdicts.tsv")).unwrap());
        }
        files.push(fs::read(out.join("cycles.json")).unwrap());
        cmd_bench(&RunConfig { sweep: false, ..base.clone() }).map_err(|e| e.to_string())?;
        files.push(bench_rows_without_timing(&fs::read_to_string(out.join("bench.tsv")).unwrap()).into_bytes());
        files.push(fs::read(out.join("cycles.json")).unwrap());
        files.push(fs::read(out.join("histogram.csv")).unwrap());
        runs.push(files);
    }
    let names = ["cpu verdicts", "apu-sim verdicts", "filter cycles.json", "bench rows", "bench cycles.json", "histogram"];
    for (i, name) in names.iter().enumerate() {
        ensure!(runs[0][i] == runs[1][i], "{name} differ between runs");
    }
    Ok(format!("{} output files identical across two runs", names.len()))
}

fn run(name: &str, f: impl FnOnce() -> Check, failed: &mut usize) {
    let t = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    report(name, result, t, failed);
}

fn report(name: &str, result: Check, t: Instant, failed: &mut usize) {
    let secs = t.elapsed().as_secs_f64();
    match result {
        Ok(msg) => println!("{name} PASS  {msg} [{secs:.1}s]"),
        Err(msg) => {
            *failed += 1;
            println!("{name} FAIL  {msg} [{secs:.1}s]");
        }
    }
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let reference = dir.path().join("ref.fa");
    write_random_reference(&reference, 1_000_000, 0xAC2);
    let mut failed = 0;

    run("AC1", ac1_triple_equivalence, &mut failed);
    run("AC2", || ac2_desk_run(&reference, dir.path()), &mut failed);
    run("AC3", ac3_ripple_adder, &mut failed);
    run("AC4", ac4_fragment_costs, &mut failed);
    run("AC5", ac5_parallel_touch, &mut failed);
    let t = Instant::now();
    let (ac6, ac7) = catch_unwind(ac6_ac7_kernel).unwrap_or_else(|_| (Err("panicked".into()), Err("panicked".into())));
    report("AC6", ac6, t, &mut failed);
    report("AC7", ac7, t, &mut failed);
    run("AC8", || ac8_recall(&reference), &mut failed);
    run("AC9", ac9_roundtrips, &mut failed);
    run("AC10", || ac10_determinism(&reference, dir.path()), &mut failed);

    if failed == 0 {
        println!("all 10 acceptance criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
