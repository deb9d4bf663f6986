//! Bit-accurate model of one associative-processor core.
//!
//! The vector register file is stored bit-sliced: for every register and
//! every bit position `s` of the 16-bit elements there is one row of
//! `columns` bits, packed 64 columns to a `u64`. Every micro-op therefore
//! works on whole rows at once, the same way the hardware drives all bit
//! processors of a slice with one read/write enable.
//!
//! Cost model: one cycle per micro-op, plus a fixed overhead per fragment
//! invocation, plus configurable flat costs for VMRF and DRAM transfers.
//! Host-side staging is free in core cycles; only bytes are counted.

mod microop;
mod report;

pub use microop::{BoolOp, Fragment, Latch, MicroOp, OpKind, Selector, SliceMask, Source};
pub use report::{CycleReport, SectionRow, Snapshot};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SLICES: usize = 16;
pub const NUM_VRS: usize = 24;
/// Registers `0..USER_VRS` are visible to kernels.
pub const USER_VRS: usize = 15;
/// First register reserved for fragment temporaries (up to 22).
pub const FIRST_TEMP_VR: usize = 15;
pub const MASK_REG: Reg = Reg(23);
pub const DEVICE_COLUMNS: usize = 32_768;
pub const VMRF_SLOTS: usize = 48;
pub const BANKS: usize = 16;

const DEFAULT_SECTION: &str = "unattributed";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("malformed micro-op {0}")]
    MalformedOp(String),
    #[error("vector register {0} does not exist")]
    InvalidRegister(usize),
    #[error("mask lane {0} does not exist")]
    InvalidLane(usize),
    #[error("VMRF slot {0} does not exist")]
    InvalidSlot(usize),
    #[error("unknown memory handle {0}")]
    UnknownHandle(u32),
    #[error("access of {len} bytes at offset {offset} exceeds handle {handle} of {size} bytes")]
    OutOfBounds {
        handle: u32,
        offset: usize,
        len: usize,
        size: usize,
    },
    #[error("column count {0} must be a positive multiple of 64 no larger than 32768")]
    InvalidGeometry(usize),
}

/// A vector register id, `0..24`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Reg(u8);

impl Reg {
    pub const fn new(i: u8) -> Result<Reg, SimError> {
        if (i as usize) < NUM_VRS {
            Ok(Reg(i))
        } else {
            Err(SimError::InvalidRegister(i as usize))
        }
    }

    /// Const constructor for register ids known at compile time.
    pub const fn fixed(i: u8) -> Reg {
        assert!((i as usize) < NUM_VRS);
        Reg(i)
    }

    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

/// One bit position of `MASK_REG`; a vector mask lives in a single lane.
///
/// Lanes 0–7 are user masks, 8–11 fragment temporaries, 12–15 arithmetic flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lane(u8);

impl Lane {
    pub const fn new(i: u8) -> Result<Lane, SimError> {
        if (i as usize) < SLICES {
            Ok(Lane(i))
        } else {
            Err(SimError::InvalidLane(i as usize))
        }
    }

    pub const fn fixed(i: u8) -> Lane {
        assert!((i as usize) < SLICES);
        Lane(i)
    }

    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub vmrf_cost: u64,
    pub dram_vr_cost: u64,
    pub fragment_overhead: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            vmrf_cost: 16,
            dram_vr_cost: 64,
            fragment_overhead: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MemHandle {
    id: u32,
    size: usize,
}

impl MemHandle {
    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VmrfDirection {
    /// VMRF slot into a vector register.
    Load,
    /// Vector register into a VMRF slot.
    Store,
}

/// Full architectural state of one core plus its accounting counters.
#[derive(Clone)]
pub struct CoreState {
    columns: usize,
    words: usize,
    vrf: Vec<u64>,
    rl: Vec<u64>,
    gvl: Vec<u64>,
    ghl: u16,
    vmrf: Vec<u64>,
    dram: Vec<Option<Vec<u8>>>,
    cycles: u64,
    sections: IndexMap<String, u64>,
    current: usize,
    cost: CostModel,
    bits_touched: u64,
    microops: u64,
    staged_in: u64,
    staged_out: u64,
    scratch: Vec<u64>,
}

impl std::fmt::Debug for CoreState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoreState")
            .field("columns", &self.columns)
            .field("cycles", &self.cycles)
            .field("sections", &self.sections)
            .field("cost", &self.cost)
            .finish_non_exhaustive()
    }
}

impl PartialEq for CoreState {
    /// Architectural equality: storage, latches and counters. Scratch space
    /// is not state.
    fn eq(&self, other: &Self) -> bool {
        self.columns == other.columns
            && self.vrf == other.vrf
            && self.rl == other.rl
            && self.gvl == other.gvl
            && self.ghl == other.ghl
            && self.vmrf == other.vmrf
            && self.dram == other.dram
            && self.cycles == other.cycles
            && self.sections == other.sections
            && self.staged_in == other.staged_in
            && self.staged_out == other.staged_out
    }
}

impl Default for CoreState {
    fn default() -> Self {
        CoreState::new(CostModel::default())
    }
}

impl CoreState {
    /// A full-width core: 24 registers of 32,768 elements.
    pub fn new(cost: CostModel) -> CoreState {
        CoreState::with_columns(DEVICE_COLUMNS, cost).expect("device geometry is valid")
    }

    /// A core with fewer columns. Column-local programs behave identically on
    /// any width; only cross-column latches (`RL_E`, `RL_W`, `GHL`) see the
    /// narrower wraparound.
    pub fn with_columns(columns: usize, cost: CostModel) -> Result<CoreState, SimError> {
        if columns == 0 || !columns.is_multiple_of(64) || columns > DEVICE_COLUMNS {
            return Err(SimError::InvalidGeometry(columns));
        }
        let words = columns / 64;
        let mut sections = IndexMap::new();
        sections.insert(DEFAULT_SECTION.to_string(), 0);
        Ok(CoreState {
            columns,
            words,
            vrf: vec![0; NUM_VRS * SLICES * words],
            rl: vec![0; SLICES * words],
            gvl: vec![0; words],
            ghl: 0,
            vmrf: vec![0; VMRF_SLOTS * SLICES * words],
            dram: Vec::new(),
            cycles: 0,
            sections,
            current: 0,
            cost,
            bits_touched: 0,
            microops: 0,
            staged_in: 0,
            staged_out: 0,
            scratch: vec![0; SLICES * words],
        })
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn cost_model(&self) -> CostModel {
        self.cost
    }

    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    pub fn microops_executed(&self) -> u64 {
        self.microops
    }

    /// Bit positions evaluated by micro-ops so far (slices × columns per op).
    pub fn bits_touched(&self) -> u64 {
        self.bits_touched
    }

    pub fn staged_bytes_in(&self) -> u64 {
        self.staged_in
    }

    pub fn staged_bytes_out(&self) -> u64 {
        self.staged_out
    }

    /// Cycle subtotals in first-use order. Always sums to [`Self::cycles`].
    pub fn section_cycles(&self) -> &IndexMap<String, u64> {
        &self.sections
    }

    pub fn current_section(&self) -> &str {
        self.sections.get_index(self.current).map(|(k, _)| k.as_str()).unwrap_or("")
    }

    /// Attributes all following cycles to `label`.
    pub fn enter_section(&mut self, label: &str) {
        self.current = match self.sections.get_index_of(label) {
            Some(i) => i,
            None => self.sections.insert_full(label.to_string(), 0).0,
        };
    }

    #[inline]
    fn tick(&mut self, n: u64) {
        self.cycles += n;
        self.sections[self.current] += n;
    }

    pub fn ghl(&self) -> u16 {
        self.ghl
    }

    #[inline]
    fn vrf_row(&self, r: usize, s: usize) -> &[u64] {
        let base = (r * SLICES + s) * self.words;
        &self.vrf[base..base + self.words]
    }

    #[inline]
    fn vrf_row_mut(&mut self, r: usize, s: usize) -> &mut [u64] {
        let base = (r * SLICES + s) * self.words;
        &mut self.vrf[base..base + self.words]
    }

    #[inline]
    fn rl_row(&self, s: usize) -> &[u64] {
        &self.rl[s * self.words..(s + 1) * self.words]
    }

    /// Bit `s` of element `c` of register `r`.
    pub fn vrf_bit(&self, r: Reg, s: usize, c: usize) -> bool {
        self.vrf_row(r.index(), s)[c / 64] >> (c % 64) & 1 == 1
    }

    pub fn rl_bit(&self, s: usize, c: usize) -> bool {
        self.rl_row(s)[c / 64] >> (c % 64) & 1 == 1
    }

    pub fn gvl_bit(&self, c: usize) -> bool {
        self.gvl[c / 64] >> (c % 64) & 1 == 1
    }

    /// Executes one micro-op. All selected slices and columns update
    /// simultaneously: neighbour reads observe pre-op latch values.
    pub fn exec_microop(&mut self, op: &MicroOp) -> Result<(), SimError> {
        op.validate()?;
        self.tick(1);
        self.microops += 1;
        self.bits_touched += u64::from(op.mask.count()) * self.columns as u64;
        let w = self.words;
        match op.kind {
            OpKind::ReadAssign | OpKind::ReadAccum(_) => {
                let mut scratch = std::mem::take(&mut self.scratch);
                for s in op.mask.slices() {
                    self.eval_expr(op, s, &mut scratch[s * w..(s + 1) * w]);
                }
                for s in op.mask.slices() {
                    let new = &scratch[s * w..(s + 1) * w];
                    let row = &mut self.rl[s * w..(s + 1) * w];
                    match op.kind {
                        OpKind::ReadAccum(acc) => combine_into(row, new, acc),
                        _ => row.copy_from_slice(new),
                    }
                }
                self.scratch = scratch;
            }
            OpKind::Write(dst) => {
                let mut scratch = std::mem::take(&mut self.scratch);
                for s in op.mask.slices() {
                    let row = &mut scratch[..w];
                    self.eval_expr(op, s, row);
                    self.vrf_row_mut(dst.index(), s).copy_from_slice(row);
                }
                self.scratch = scratch;
            }
            OpKind::GvlAssign => {
                // Empty mask: the AND over no slices is all ones.
                self.gvl.fill(!0);
                for s in op.mask.slices() {
                    combine_into(&mut self.gvl, &self.rl[s * w..(s + 1) * w], BoolOp::And);
                }
            }
            OpKind::GhlAssign => {
                for s in op.mask.slices() {
                    let any = self.rl_row(s).iter().any(|&x| x != 0);
                    if any {
                        self.ghl |= 1 << s;
                    } else {
                        self.ghl &= !(1 << s);
                    }
                }
            }
        }
        Ok(())
    }

    fn eval_expr(&self, op: &MicroOp, s: usize, out: &mut [u64]) {
        let mut srcs = op.sources();
        let first = srcs.next().expect("validated op has a source");
        self.eval_source(first, s, out, None);
        if let Some(second) = srcs.next() {
            self.eval_source(second, s, out, Some(op.op));
        }
    }

    /// Writes (or combines into `out`) the row of `src` seen from slice `s`.
    fn eval_source(&self, src: &Source, s: usize, out: &mut [u64], op: Option<BoolOp>) {
        let inv = if src.negated { !0u64 } else { 0 };
        let w = self.words;
        match src.selector {
            Selector::Vrf(r) => apply(out, op, |i| self.vrf_row(r.index(), s)[i] ^ inv),
            Selector::Vrf2(a, b) => {
                let (ra, rb) = (self.vrf_row(a.index(), s), self.vrf_row(b.index(), s));
                apply(out, op, |i| (ra[i] & rb[i]) ^ inv)
            }
            Selector::Const0 => apply(out, op, |_| inv),
            Selector::Const1 => apply(out, op, |_| !inv),
            Selector::Latch(l) => match l {
                Latch::Rl => {
                    let r = self.rl_row(s);
                    apply(out, op, |i| r[i] ^ inv)
                }
                Latch::Gvl => apply(out, op, |i| self.gvl[i] ^ inv),
                Latch::Ghl => {
                    let v = if self.ghl >> s & 1 == 1 { !0u64 } else { 0 };
                    apply(out, op, |_| v ^ inv)
                }
                Latch::RlN => {
                    if s == 0 {
                        apply(out, op, |_| inv)
                    } else {
                        let r = self.rl_row(s - 1);
                        apply(out, op, |i| r[i] ^ inv)
                    }
                }
                Latch::RlS => {
                    if s == SLICES - 1 {
                        apply(out, op, |_| inv)
                    } else {
                        let r = self.rl_row(s + 1);
                        apply(out, op, |i| r[i] ^ inv)
                    }
                }
                Latch::RlE => {
                    let r = self.rl_row(s);
                    apply(out, op, |i| ((r[i] >> 1) | (r[(i + 1) % w] << 63)) ^ inv)
                }
                Latch::RlW => {
                    let r = self.rl_row(s);
                    apply(out, op, |i| ((r[i] << 1) | (r[(i + w - 1) % w] >> 63)) ^ inv)
                }
            },
        }
    }

    /// Issues a fragment: its micro-ops in order plus the fixed invocation
    /// overhead, all attributed to the current section.
    pub fn run_fragment(&mut self, frag: &Fragment) -> Result<(), SimError> {
        self.tick(self.cost.fragment_overhead);
        for op in &frag.ops {
            self.exec_microop(op)?;
        }
        Ok(())
    }

    pub fn alloc(&mut self, size: usize) -> MemHandle {
        let id = self.dram.len() as u32;
        self.dram.push(Some(vec![0; size]));
        MemHandle { id, size }
    }

    pub fn free(&mut self, handle: MemHandle) -> Result<(), SimError> {
        self.buffer(handle)?;
        self.dram[handle.id as usize] = None;
        Ok(())
    }

    fn buffer(&self, h: MemHandle) -> Result<&Vec<u8>, SimError> {
        self.dram
            .get(h.id as usize)
            .and_then(|b| b.as_ref())
            .ok_or(SimError::UnknownHandle(h.id))
    }

    fn checked_range(&self, h: MemHandle, offset: usize, len: usize) -> Result<std::ops::Range<usize>, SimError> {
        let size = self.buffer(h)?.len();
        match offset.checked_add(len) {
            Some(end) if end <= size => Ok(offset..end),
            _ => Err(SimError::OutOfBounds {
                handle: h.id,
                offset,
                len,
                size,
            }),
        }
    }

    /// Host copies words into device DRAM. Costs no core cycles.
    pub fn stage_to_device(&mut self, h: MemHandle, offset: usize, data: &[u16]) -> Result<(), SimError> {
        let range = self.checked_range(h, offset, data.len() * 2)?;
        let buf = self.dram[h.id as usize].as_mut().expect("checked above");
        for (dst, w) in buf[range].chunks_exact_mut(2).zip(data) {
            dst.copy_from_slice(&w.to_le_bytes());
        }
        self.staged_in += data.len() as u64 * 2;
        Ok(())
    }

    /// Host reads words back out of device DRAM.
    pub fn read_from_device(&mut self, h: MemHandle, offset: usize, words: usize) -> Result<Vec<u16>, SimError> {
        let range = self.checked_range(h, offset, words * 2)?;
        let buf = self.buffer(h)?;
        let out = buf[range]
            .chunks_exact(2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]))
            .collect();
        self.staged_out += words as u64 * 2;
        Ok(out)
    }

    /// Loads one full register (one word per column) from device DRAM.
    pub fn dram_load_vr(&mut self, dst: Reg, h: MemHandle, offset: usize) -> Result<(), SimError> {
        let range = self.checked_range(h, offset, self.columns * 2)?;
        let words: Vec<u16> = self.buffer(h)?[range]
            .chunks_exact(2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]))
            .collect();
        self.scatter_words(dst, &words);
        self.tick(self.cost.dram_vr_cost);
        Ok(())
    }

    /// Stores one full register into device DRAM.
    pub fn dram_store_vr(&mut self, src: Reg, h: MemHandle, offset: usize) -> Result<(), SimError> {
        let range = self.checked_range(h, offset, self.columns * 2)?;
        let words = self.gather_words(src);
        let buf = self.dram[h.id as usize].as_mut().expect("checked above");
        for (dst, w) in buf[range].chunks_exact_mut(2).zip(&words) {
            dst.copy_from_slice(&w.to_le_bytes());
        }
        self.tick(self.cost.dram_vr_cost);
        Ok(())
    }

    pub fn vmrf_transfer(&mut self, dir: VmrfDirection, vr: Reg, slot: usize) -> Result<(), SimError> {
        if slot >= VMRF_SLOTS {
            return Err(SimError::InvalidSlot(slot));
        }
        let plane = SLICES * self.words;
        let vr_range = vr.index() * plane..(vr.index() + 1) * plane;
        let slot_range = slot * plane..(slot + 1) * plane;
        match dir {
            VmrfDirection::Load => self.vrf[vr_range].copy_from_slice(&self.vmrf[slot_range]),
            VmrfDirection::Store => self.vmrf[slot_range].copy_from_slice(&self.vrf[vr_range]),
        }
        self.tick(self.cost.vmrf_cost);
        Ok(())
    }

    /// Result extraction: one 16-bit word per column. Counts host transfer
    /// bytes but no core cycles.
    pub fn read_vr_to_host(&mut self, vr: Reg) -> Vec<u16> {
        self.staged_out += self.columns as u64 * 2;
        self.gather_words(vr)
    }

    /// Backdoor register write for tests and setup: no cycles, no bytes.
    pub fn poke_vr(&mut self, vr: Reg, words: &[u16]) {
        assert_eq!(words.len(), self.columns, "one word per column");
        self.scatter_words(vr, words);
    }

    /// Backdoor register read: no cycles, no bytes.
    pub fn peek_vr(&self, vr: Reg) -> Vec<u16> {
        self.gather_words(vr)
    }

    /// Backdoor read of one mask lane as a column bit vector.
    pub fn peek_lane(&self, lane: Lane) -> Vec<bool> {
        let row = self.vrf_row(MASK_REG.index(), lane.index());
        (0..self.columns).map(|c| row[c / 64] >> (c % 64) & 1 == 1).collect()
    }

    /// Backdoor write of one mask lane; other lanes untouched.
    pub fn poke_lane(&mut self, lane: Lane, bits: &[bool]) {
        assert_eq!(bits.len(), self.columns, "one bit per column");
        let row = self.vrf_row_mut(MASK_REG.index(), lane.index());
        row.fill(0);
        for (c, &b) in bits.iter().enumerate() {
            if b {
                row[c / 64] |= 1 << (c % 64);
            }
        }
    }

    fn scatter_words(&mut self, vr: Reg, words: &[u16]) {
        debug_assert_eq!(words.len(), self.columns);
        for s in 0..SLICES {
            let row = self.vrf_row_mut(vr.index(), s);
            for (i, chunk) in words.chunks_exact(64).enumerate() {
                let mut bits = 0u64;
                for (c, &w) in chunk.iter().enumerate() {
                    bits |= u64::from(w >> s & 1) << c;
                }
                row[i] = bits;
            }
        }
    }

    fn gather_words(&self, vr: Reg) -> Vec<u16> {
        let mut out = vec![0u16; self.columns];
        for s in 0..SLICES {
            let row = self.vrf_row(vr.index(), s);
            for (c, w) in out.iter_mut().enumerate() {
                *w |= ((row[c / 64] >> (c % 64) & 1) as u16) << s;
            }
        }
        out
    }
}

#[inline(always)]
fn apply(out: &mut [u64], op: Option<BoolOp>, f: impl Fn(usize) -> u64) {
    match op {
        None => out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i)),
        Some(BoolOp::And) => out.iter_mut().enumerate().for_each(|(i, o)| *o &= f(i)),
        Some(BoolOp::Or) => out.iter_mut().enumerate().for_each(|(i, o)| *o |= f(i)),
        Some(BoolOp::Xor) => out.iter_mut().enumerate().for_each(|(i, o)| *o ^= f(i)),
    }
}

#[inline(always)]
fn combine_into(dst: &mut [u64], src: &[u64], op: BoolOp) {
    match op {
        BoolOp::And => dst.iter_mut().zip(src).for_each(|(d, s)| *d &= s),
        BoolOp::Or => dst.iter_mut().zip(src).for_each(|(d, s)| *d |= s),
        BoolOp::Xor => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s),
    }
}
