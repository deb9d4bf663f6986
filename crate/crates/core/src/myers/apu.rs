//! Myers scoring as a microcode program: one candidate per column, the
//! query's chunks walked in the inner loop with Pv/Mv parked in the VMRF.

use crate::candgen::DeviceLayout;
use crate::seq::PackedSeq;
use crate::sim::{CoreState, CycleReport, Lane, MemHandle, Reg, SliceMask, VmrfDirection, VMRF_SLOTS};
use crate::ucode::{
    self, AdderKind, BitwiseOp::{And, Or, OrNot, Xor},
    CARRY_FLAG,
};

use super::peq::{compute_peq, PeqTable};
use super::MyersError;

const PV: Reg = Reg::fixed(0);
const MV: Reg = Reg::fixed(1);
const EQ: Reg = Reg::fixed(2);
const XV: Reg = Reg::fixed(3);
const XH: Reg = Reg::fixed(4);
const PH: Reg = Reg::fixed(5);
const MH: Reg = Reg::fixed(6);
const SCORE: Reg = Reg::fixed(7);
const MIN: Reg = Reg::fixed(8);
const BASES: Reg = Reg::fixed(9);
const TMP: Reg = Reg::fixed(10);

const ADD_CARRY: Lane = Lane::fixed(0);
const PH_MSB: Lane = Lane::fixed(1);
const MH_MSB: Lane = Lane::fixed(2);
const SCORE_LANE: Lane = Lane::fixed(3);
const MATCH: Lane = Lane::fixed(4);

pub const SECTION_INIT: &str = "initializing Pv and Mv";
pub const SECTION_LOAD: &str = "loading saved Pv and Mv";
pub const SECTION_EQ: &str = "computing eq";
pub const SECTION_XV: &str = "computing Xv";
pub const SECTION_XH: &str = "computing Xh";
pub const SECTION_PH: &str = "computing Ph";
pub const SECTION_MH: &str = "computing Mh";
pub const SECTION_SCORES: &str = "computing scores";
pub const SECTION_SHIFT_PH: &str = "shift and save Ph";
pub const SECTION_SHIFT_MH: &str = "shift and save Mh";
pub const SECTION_PV: &str = "computing Pv";
pub const SECTION_MV: &str = "computing Mv";
pub const SECTION_STORE: &str = "storing Pv and Mv";

/// Kernel sections in report order.
pub const KERNEL_SECTIONS: [&str; 13] = [
    SECTION_INIT,
    SECTION_LOAD,
    SECTION_EQ,
    SECTION_XV,
    SECTION_XH,
    SECTION_PH,
    SECTION_MH,
    SECTION_SCORES,
    SECTION_SHIFT_PH,
    SECTION_SHIFT_MH,
    SECTION_PV,
    SECTION_MV,
    SECTION_STORE,
];

/// Longest query whose Pv/Mv chunks fit in the VMRF.
pub const MAX_CHUNKS: usize = VMRF_SLOTS / 2 - 1;

/// Candidates staged in device DRAM.
#[derive(Debug, Clone, Copy)]
pub struct DeviceCandidates {
    handle: MemHandle,
    n: usize,
    count: usize,
}

impl DeviceCandidates {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelOutput {
    /// One score per candidate, in column order.
    pub scores: Vec<u16>,
    /// Cycles of the kernel proper (no staging or readback).
    pub report: CycleReport,
}

/// Copies a transposed candidate set into device DRAM, one full register
/// row per base group. Columns past `count` are zero-filled.
pub fn stage_candidates(core: &mut CoreState, layout: &DeviceLayout) -> Result<DeviceCandidates, MyersError> {
    if layout.count() > core.columns() {
        return Err(MyersError::TooManyCandidates {
            count: layout.count(),
            columns: core.columns(),
        });
    }
    let row_bytes = core.columns() * 2;
    let handle = core.alloc(layout.groups() * row_bytes);
    for g in 0..layout.groups() {
        core.stage_to_device(handle, g * row_bytes, layout.group(g))?;
    }
    Ok(DeviceCandidates {
        handle,
        n: layout.n(),
        count: layout.count(),
    })
}

/// Runs the scoring program; the per-column minimum ends up in the `MIN`
/// register. Returns the cycles spent, by section.
pub fn run_kernel(core: &mut CoreState, peq: &PeqTable, dev: &DeviceCandidates) -> Result<CycleReport, MyersError> {
    let m = peq.m();
    let chunks = peq.chunks();
    if m == 0 || dev.n == 0 {
        return Err(MyersError::EmptySequence);
    }
    if chunks > MAX_CHUNKS {
        return Err(MyersError::QueryTooLong { m, max: MAX_CHUNKS * 16 });
    }
    let before = core.snapshot();
    for label in KERNEL_SECTIONS {
        core.enter_section(label);
    }
    let adder = AdderKind::CarrySelect;
    let spill = chunks > 1;
    let row_bytes = core.columns() * 2;
    let top = (m - 1) % 16;

    core.enter_section(SECTION_INIT);
    ucode::vmv_vx(core, MV, 0)?;
    ucode::vmv_vx(core, SCORE, m as u16)?;
    ucode::vmv_vx(core, MIN, m as u16)?;
    for k in 0..chunks {
        ucode::vmv_vx(core, PV, peq.valid_mask(k))?;
        if spill {
            core.vmrf_transfer(VmrfDirection::Store, PV, 2 * k)?;
            core.vmrf_transfer(VmrfDirection::Store, MV, 2 * k + 1)?;
        }
    }

    for j in 0..dev.n {
        let pos = j % 8;
        if pos == 0 {
            core.enter_section(SECTION_EQ);
            core.dram_load_vr(BASES, dev.handle, (j / 8) * row_bytes)?;
        }
        let field = SliceMask(0b11 << (2 * pos));
        for k in 0..chunks {
            let first = k == 0;
            if spill {
                core.enter_section(SECTION_LOAD);
                core.vmrf_transfer(VmrfDirection::Load, PV, 2 * k)?;
                core.vmrf_transfer(VmrfDirection::Load, MV, 2 * k + 1)?;
            }

            core.enter_section(SECTION_EQ);
            ucode::vmv_vx(core, EQ, 0)?;
            for b in 0..4u16 {
                ucode::vmseq(core, BASES, b << (2 * pos), MATCH, field)?;
                ucode::or_scalar_where(core, EQ, peq.get(b as u8, k), MATCH)?;
            }

            core.enter_section(SECTION_XV);
            ucode::bitwise_vv(core, Or, XV, EQ, MV)?;

            core.enter_section(SECTION_XH);
            ucode::bitwise_vv(core, And, XH, EQ, PV)?;
            let cin = if first { None } else { Some(ADD_CARRY) };
            ucode::vadd_vv(core, adder, XH, XH, PV, cin, ADD_CARRY)?;
            ucode::bitwise_vv(core, Xor, XH, XH, PV)?;
            ucode::bitwise_vv(core, Or, XH, XH, EQ)?;

            core.enter_section(SECTION_PH);
            ucode::bitwise_vv(core, Or, PH, XH, PV)?;
            ucode::bitwise_vv(core, OrNot, PH, MV, PH)?;

            core.enter_section(SECTION_MH);
            ucode::bitwise_vv(core, And, MH, PV, XH)?;

            if k == chunks - 1 {
                core.enter_section(SECTION_SCORES);
                ucode::extract_bit(core, PH, top, SCORE_LANE)?;
                ucode::mask_to_01(core, SCORE_LANE, TMP)?;
                ucode::vadd_vv(core, adder, SCORE, SCORE, TMP, None, CARRY_FLAG)?;
                ucode::extract_bit(core, MH, top, SCORE_LANE)?;
                ucode::mask_to_01(core, SCORE_LANE, TMP)?;
                ucode::vsub_vv(core, adder, SCORE, SCORE, TMP, CARRY_FLAG)?;
                ucode::vlt_vv(core, adder, SCORE, MIN, SCORE_LANE)?;
                ucode::vcopy_masked(core, MIN, SCORE, SCORE_LANE)?;
            }

            let shift_in = |lane| if first { None } else { Some(lane) };
            core.enter_section(SECTION_SHIFT_PH);
            ucode::lsl_with_carry(core, PH, shift_in(PH_MSB), PH_MSB)?;
            core.enter_section(SECTION_SHIFT_MH);
            ucode::lsl_with_carry(core, MH, shift_in(MH_MSB), MH_MSB)?;

            core.enter_section(SECTION_PV);
            ucode::bitwise_vv(core, Or, PV, XV, PH)?;
            ucode::bitwise_vv(core, OrNot, PV, MH, PV)?;

            core.enter_section(SECTION_MV);
            ucode::bitwise_vv(core, And, MV, PH, XV)?;

            if spill {
                core.enter_section(SECTION_STORE);
                core.vmrf_transfer(VmrfDirection::Store, PV, 2 * k)?;
                core.vmrf_transfer(VmrfDirection::Store, MV, 2 * k + 1)?;
            }
        }
    }
    core.enter_section("unattributed");
    Ok(CycleReport::since(&before, core))
}

/// Copies the per-column minima back to the host.
pub fn read_scores(core: &mut CoreState, dev: &DeviceCandidates) -> Vec<u16> {
    let mut all = core.read_vr_to_host(MIN);
    all.truncate(dev.count);
    all
}

pub fn free_candidates(core: &mut CoreState, dev: DeviceCandidates) -> Result<(), MyersError> {
    core.free(dev.handle)?;
    Ok(())
}

/// Stage, score and read back one candidate set.
pub fn myers_apu_kernel(core: &mut CoreState, query: &PackedSeq, layout: &DeviceLayout) -> Result<KernelOutput, MyersError> {
    if query.is_empty() || layout.n() == 0 {
        return Err(MyersError::EmptySequence);
    }
    let peq = compute_peq(query);
    let dev = stage_candidates(core, layout)?;
    let report = run_kernel(core, &peq, &dev)?;
    let scores = read_scores(core, &dev);
    free_candidates(core, dev)?;
    Ok(KernelOutput { scores, report })
}

/// Kernel cycles for a query of length `m` against candidates of length `n`
/// under the core's cost model, without running the program.
pub fn kernel_cycles(m: usize, n: usize, cost: crate::sim::CostModel) -> u64 {
    let chunks = m.div_ceil(16) as u64;
    let n = n as u64;
    let o = cost.fragment_overhead;
    let f = |ops: u64| ops + o;
    let spill = chunks > 1;
    let vmrf2 = if spill { 2 * cost.vmrf_cost } else { 0 };
    let init = 3 * f(3) + chunks * (f(3) + vmrf2);
    let eq = f(3) + 4 * (f(4) + f(4));
    let per_chunk = vmrf2
        + eq
        + f(3)
        + (f(2) + f(40) + f(3) + f(3))
        + (f(3) + f(3))
        + f(2)
        + 2 * f(7)
        + (f(3) + f(3))
        + f(2)
        + vmrf2;
    let scores = 2 * (f(3) + f(4)) + f(40) + f(41) + f(41) + f(5);
    let loads = n.div_ceil(8) * cost.dram_vr_cost;
    init + loads + n * (chunks * per_chunk + scores)
}
