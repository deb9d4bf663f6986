use super::*;
use crate::candgen::transpose_candidates;
use crate::seq::{unpack_seq, Base, PackedSeq};
use crate::sim::{CoreState, CostModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_seq(rng: &mut ChaCha8Rng, len: usize) -> PackedSeq {
    PackedSeq::from_bases((0..len).map(|_| Base::from_code(rng.gen_range(0..4))))
}

fn narrow_core() -> CoreState {
    CoreState::with_columns(64, CostModel::default()).unwrap()
}

fn kernel_scores(core: &mut CoreState, q: &PackedSeq, cands: &[PackedSeq]) -> KernelOutput {
    let n = cands[0].len();
    let layout = transpose_candidates(cands, n).unwrap();
    myers_apu_kernel(core, q, &layout).unwrap()
}

#[test]
fn identical_candidate_scores_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let q = random_seq(&mut rng, 20);
    let out = kernel_scores(&mut narrow_core(), &q, std::slice::from_ref(&q));
    assert_eq!(out.scores, vec![0]);
}

#[test]
fn kernel_matches_dp_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut core = narrow_core();
    for m in [1, 2, 15, 16, 17, 33, 50] {
        let n = rng.gen_range(m..=2 * m);
        let q = random_seq(&mut rng, m);
        let cands: Vec<PackedSeq> = (0..64).map(|_| random_seq(&mut rng, n)).collect();
        let out = kernel_scores(&mut core, &q, &cands);
        for (c, cand) in cands.iter().enumerate() {
            assert_eq!(
                u32::from(out.scores[c]),
                edit_distance_dp(&q, cand).unwrap(),
                "m={m} n={n} column {c}"
            );
        }
    }
}

#[test]
fn kernel_cycles_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (m, n) in [(5, 6), (16, 19), (17, 20), (40, 47)] {
        let q = random_seq(&mut rng, m);
        let cands = vec![random_seq(&mut rng, n)];
        let out = kernel_scores(&mut narrow_core(), &q, &cands);
        assert_eq!(out.report.total_cycles, kernel_cycles(m, n, CostModel::default()), "m={m} n={n}");
    }
    let cost = CostModel {
        vmrf_cost: 5,
        dram_vr_cost: 7,
        fragment_overhead: 1,
    };
    let q = random_seq(&mut rng, 35);
    let layout = transpose_candidates([&random_seq(&mut rng, 40)], 40).unwrap();
    let mut core = CoreState::with_columns(64, cost).unwrap();
    let out = myers_apu_kernel(&mut core, &q, &layout).unwrap();
    assert_eq!(out.report.total_cycles, kernel_cycles(35, 40, cost));
}

#[test]
fn cycles_do_not_depend_on_count_or_content() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let q = random_seq(&mut rng, 30);
    let one = vec![random_seq(&mut rng, 34)];
    let many: Vec<PackedSeq> = (0..64).map(|_| random_seq(&mut rng, 34)).collect();
    let a = kernel_scores(&mut narrow_core(), &q, &one);
    let b = kernel_scores(&mut narrow_core(), &q, &many);
    assert_eq!(a.report, b.report);
}

#[test]
fn column_purity_under_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let q = random_seq(&mut rng, 24);
    let cands: Vec<PackedSeq> = (0..40).map(|_| random_seq(&mut rng, 30)).collect();
    let mut perm: Vec<usize> = (0..cands.len()).collect();
    perm.reverse();
    perm.swap(3, 17);
    let shuffled: Vec<PackedSeq> = perm.iter().map(|&i| cands[i].clone()).collect();
    let a = kernel_scores(&mut narrow_core(), &q, &cands).scores;
    let b = kernel_scores(&mut narrow_core(), &q, &shuffled).scores;
    for (pos, &orig) in perm.iter().enumerate() {
        assert_eq!(b[pos], a[orig]);
    }
}

#[test]
fn sections_are_labelled_and_sum_to_total() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let q = random_seq(&mut rng, 48);
    let out = kernel_scores(&mut narrow_core(), &q, &[random_seq(&mut rng, 56)]);
    let r = &out.report;
    let sum: u64 = r.sections.iter().map(|s| s.cycles).sum();
    assert_eq!(sum, r.total_cycles);
    for s in &r.sections {
        assert!(KERNEL_SECTIONS.contains(&s.label.as_str()), "{}", s.label);
    }
    let labels: Vec<&str> = r.sections.iter().map(|s| s.label.as_str()).collect();
    let order: Vec<&str> = KERNEL_SECTIONS.iter().copied().filter(|l| labels.contains(l)).collect();
    assert_eq!(labels, order);
    let largest = r.sections.iter().max_by_key(|s| s.cycles).unwrap();
    assert_eq!(largest.label, SECTION_EQ);
}

#[test]
fn single_chunk_skips_vmrf_sections() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let q = random_seq(&mut rng, 10);
    let out = kernel_scores(&mut narrow_core(), &q, &[random_seq(&mut rng, 12)]);
    assert!(out.report.section("loading saved Pv and Mv").is_none());
    assert!(out.report.section("storing Pv and Mv").is_none());
}

#[test]
fn kernel_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut core = narrow_core();
    let q = random_seq(&mut rng, 10);
    let cands: Vec<PackedSeq> = (0..65).map(|_| random_seq(&mut rng, 12)).collect();
    let layout = transpose_candidates(&cands, 12).unwrap();
    assert_eq!(
        myers_apu_kernel(&mut core, &q, &layout),
        Err(MyersError::TooManyCandidates { count: 65, columns: 64 })
    );
    let long = random_seq(&mut rng, MAX_CHUNKS * 16 + 1);
    let layout = transpose_candidates([&random_seq(&mut rng, 12)], 12).unwrap();
    assert!(matches!(
        myers_apu_kernel(&mut core, &long, &layout),
        Err(MyersError::QueryTooLong { .. })
    ));
    assert_eq!(
        myers_apu_kernel(&mut core, &PackedSeq::new(), &layout),
        Err(MyersError::EmptySequence)
    );
}

#[test]
fn longest_query_fits() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = MAX_CHUNKS * 16;
    let q = random_seq(&mut rng, m);
    let c = random_seq(&mut rng, m + 1);
    let out = kernel_scores(&mut narrow_core(), &q, std::slice::from_ref(&c));
    assert_eq!(u32::from(out.scores[0]), edit_distance_dp(&q, &c).unwrap());
}

#[test]
fn filter_threshold_semantics() {
    let scores = [0, 3, 5, 10];
    let starts = [100, 200, 300, 400];
    let v = filter_candidates("q", &starts, &scores, 5);
    assert_eq!(v.iter().map(|v| v.kept).collect::<Vec<_>>(), [true, true, true, false]);
    assert_eq!(v[2].ref_start, 300);
    assert_eq!(v[3].tsv_row(), "q\t3\t400\t10\t0");
    assert!(filter_candidates("q", &starts, &scores, 10).iter().all(|v| v.kept));
    let zero = filter_candidates("q", &starts, &scores, 0);
    assert_eq!(zero.iter().filter(|v| v.kept).count(), 1);
}

#[test]
fn default_threshold_is_ten_percent_rounded_up() {
    assert_eq!(default_threshold(300), 30);
    assert_eq!(default_threshold(1), 1);
    assert_eq!(default_threshold(101), 11);
}

#[test]
fn filter_on_planted_edits_matches_dp() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let q = random_seq(&mut rng, 60);
    let mut scores = Vec::new();
    let mut want = Vec::new();
    for e in 0..30 {
        let mut c: Vec<Base> = q.iter().collect();
        for _ in 0..e {
            let i = rng.gen_range(0..c.len());
            c[i] = Base::from_code(rng.gen_range(0..4));
        }
        let c = PackedSeq::from_bases(c);
        let d = edit_distance_dp(&q, &c).unwrap();
        scores.push(myers_cpu(&q, &c, WordWidth::W64).unwrap());
        want.push(d <= 15);
    }
    let starts = vec![0; scores.len()];
    let got: Vec<bool> = filter_candidates("q", &starts, &scores, 15).iter().map(|v| v.kept).collect();
    assert_eq!(got, want);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn score_bounds_and_exact_substring(seed in any::<u64>(), m in 1usize..40, extra in 0usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_seq(&mut rng, m);
        let c = if rng.gen_bool(0.3) {
            // plant the query somewhere
            let mut bases: Vec<Base> = random_seq(&mut rng, extra).iter().collect();
            let at = rng.gen_range(0..=bases.len());
            bases.splice(at..at, q.iter());
            PackedSeq::from_bases(bases)
        } else {
            random_seq(&mut rng, m + extra)
        };
        let s = myers_cpu(&q, &c, WordWidth::W64).unwrap();
        prop_assert!(s as usize <= m);
        prop_assert_eq!(s == 0, unpack_seq(&c).contains(&unpack_seq(&q)));
    }

    #[test]
    fn one_substitution_moves_score_by_at_most_one(seed in any::<u64>(), m in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_seq(&mut rng, m);
        let extra = rng.gen_range(0..=m);
        let c = random_seq(&mut rng, m + extra);
        let mut edited: Vec<Base> = c.iter().collect();
        let i = rng.gen_range(0..edited.len());
        edited[i] = Base::from_code((edited[i].code() + rng.gen_range(1..4)) % 4);
        let a = myers_cpu(&q, &c, WordWidth::W32).unwrap() as i64;
        let b = myers_cpu(&q, &PackedSeq::from_bases(edited), WordWidth::W32).unwrap() as i64;
        prop_assert!((a - b).abs() <= 1);
    }

    #[test]
    fn chunk_width_independence(seed in any::<u64>(), m in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_seq(&mut rng, m);
        let extra = rng.gen_range(0..=m);
        let c = random_seq(&mut rng, m + extra);
        prop_assert_eq!(
            myers_cpu(&q, &c, WordWidth::W16).unwrap(),
            myers_cpu(&q, &c, WordWidth::W64).unwrap()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn kernel_equals_cpu(seed in any::<u64>(), m in 1usize..70) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = m + rng.gen_range(0..=m);
        let q = random_seq(&mut rng, m);
        let cands: Vec<PackedSeq> = (0..rng.gen_range(1..=64)).map(|_| random_seq(&mut rng, n)).collect();
        let out = kernel_scores(&mut narrow_core(), &q, &cands);
        let mut cpu = MyersCpu::<u16>::new(&q).unwrap();
        for (c, cand) in cands.iter().enumerate() {
            prop_assert_eq!(u32::from(out.scores[c]), cpu.score(cand).unwrap());
        }
    }
}
