//! Microcode fragments for the vector operations the filter kernel needs.
//!
//! Every public operation builds one [`Fragment`] from its operands and
//! issues it on a [`CoreState`], so its cost is `ops + fragment_overhead`.
//! The `*_frag` builders are exposed separately so callers (and the golden
//! cost table) can inspect the exact micro-op listing without running it.
//!
//! Register conventions: fragments may clobber the reserved registers
//! `T0..T3` (15–18) and read latches; they never touch user registers or
//! mask lanes other than the ones named as outputs.

use crate::sim::{
    BoolOp::{And, Or, Xor},
    CoreState, Fragment, Lane, MicroOp, Reg, SimError, SliceMask, Source, MASK_REG,
};

/// Reserved temporaries used inside fragments.
pub const T0: Reg = Reg::fixed(15);
pub const T1: Reg = Reg::fixed(16);
pub const T2: Reg = Reg::fixed(17);
pub const T3: Reg = Reg::fixed(18);

/// First lane reserved for fragment temporaries.
pub const TEMP_LANE: Lane = Lane::fixed(8);
/// Default destination for carry-outs nobody asked for.
pub const CARRY_FLAG: Lane = Lane::fixed(12);

const ALL: SliceMask = SliceMask::ALL;

fn vr(r: Reg) -> Source {
    Source::vr(r)
}

fn mask_lane(l: Lane) -> SliceMask {
    SliceMask::lane(l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitwiseOp {
    Or,
    And,
    Xor,
    Not,
    /// `a | ~b`
    OrNot,
    /// `a & ~b`
    AndNot,
}

/// Which adder realization `vadd_vv` issues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AdderKind {
    /// Bit-serial ripple carry, one slice at a time.
    Ripple,
    /// 4-bit groups rippled in parallel for both carry-in values, then
    /// selected group by group.
    #[default]
    CarrySelect,
}

/// Carry into bit 0 of an addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CarryIn {
    Zero,
    One,
    Lane(Lane),
}

impl From<Option<Lane>> for CarryIn {
    fn from(l: Option<Lane>) -> Self {
        l.map_or(CarryIn::Zero, CarryIn::Lane)
    }
}

/// Two ops that leave the carry-in on GVL (column broadcast).
fn carry_to_gvl(f: &mut Fragment, cin: CarryIn) {
    match cin {
        CarryIn::Lane(l) => {
            f.push(MicroOp::rl(mask_lane(l), vr(MASK_REG)));
            f.push(MicroOp::gvl(mask_lane(l)));
        }
        CarryIn::Zero | CarryIn::One => {
            let c = if cin == CarryIn::One { Source::ONE } else { Source::ZERO };
            f.push(MicroOp::rl(SliceMask::LSB, c));
            f.push(MicroOp::gvl(SliceMask::LSB));
        }
    }
}

pub fn bitwise_frag(op: BitwiseOp, dst: Reg, a: Reg, b: Reg) -> Fragment {
    let mut f = Fragment::with_capacity("bitwise_vv", 3);
    match op {
        BitwiseOp::Or => {
            f.push(MicroOp::rl(ALL, vr(a)));
            f.push(MicroOp::rl_acc(ALL, Or, vr(b)));
            f.push(MicroOp::write(ALL, dst, Source::RL));
        }
        BitwiseOp::And => {
            f.push(MicroOp::rl(ALL, Source::vr2(a, b)));
            f.push(MicroOp::write(ALL, dst, Source::RL));
        }
        BitwiseOp::Xor => {
            f.push(MicroOp::rl(ALL, vr(a)));
            f.push(MicroOp::rl_acc(ALL, Xor, vr(b)));
            f.push(MicroOp::write(ALL, dst, Source::RL));
        }
        BitwiseOp::Not => {
            f.push(MicroOp::rl(ALL, vr(a)));
            f.push(MicroOp::write(ALL, dst, Source::RL.inv()));
        }
        BitwiseOp::OrNot => {
            f.push(MicroOp::rl(ALL, vr(b)));
            f.push(MicroOp::rl2(ALL, vr(a), Or, Source::RL.inv()));
            f.push(MicroOp::write(ALL, dst, Source::RL));
        }
        BitwiseOp::AndNot => {
            f.push(MicroOp::rl(ALL, vr(b)));
            f.push(MicroOp::rl2(ALL, vr(a), And, Source::RL.inv()));
            f.push(MicroOp::write(ALL, dst, Source::RL));
        }
    }
    f
}

/// Element-wise boolean operation; `b` is ignored for [`BitwiseOp::Not`].
pub fn bitwise_vv(core: &mut CoreState, op: BitwiseOp, dst: Reg, a: Reg, b: Reg) -> Result<(), SimError> {
    core.run_fragment(&bitwise_frag(op, dst, a, b))
}

pub fn vmv_vx_frag(dst: Reg, value: u16) -> Fragment {
    let mut f = Fragment::with_capacity("vmv_vx", 3);
    f.push(MicroOp::rl(ALL, Source::ZERO));
    f.push(MicroOp::rl(SliceMask(value), Source::ONE));
    f.push(MicroOp::write(ALL, dst, Source::RL));
    f
}

/// Broadcasts a scalar into every element of `dst`.
pub fn vmv_vx(core: &mut CoreState, dst: Reg, value: u16) -> Result<(), SimError> {
    core.run_fragment(&vmv_vx_frag(dst, value))
}

pub fn vmseq_frag(src: Reg, scalar: u16, out: Lane, slice_mask: SliceMask) -> Fragment {
    let mut f = Fragment::with_capacity("vmseq", 4);
    f.push(MicroOp::rl(slice_mask, vr(src)));
    f.push(MicroOp::rl(SliceMask(!scalar) & slice_mask, Source::RL.inv()));
    f.push(MicroOp::gvl(slice_mask));
    f.push(MicroOp::write(mask_lane(out), MASK_REG, Source::GVL));
    f
}

/// Associative search: `out[c] = 1` iff element `c` of `src` equals `scalar`
/// on every slice in `slice_mask`.
pub fn vmseq(core: &mut CoreState, src: Reg, scalar: u16, out: Lane, slice_mask: SliceMask) -> Result<(), SimError> {
    core.run_fragment(&vmseq_frag(src, scalar, out, slice_mask))
}

pub fn or_scalar_where_frag(dst: Reg, scalar_slices: u16, where_: Lane) -> Fragment {
    let mut f = Fragment::with_capacity("or_scalar_where", 4);
    let m = SliceMask(scalar_slices);
    f.push(MicroOp::rl(mask_lane(where_), vr(MASK_REG)));
    f.push(MicroOp::gvl(mask_lane(where_)));
    f.push(MicroOp::rl2(m, vr(dst), Or, Source::GVL));
    f.push(MicroOp::write(m, dst, Source::RL));
    f
}

/// `dst[c] |= scalar_slices` wherever the mask lane is set: the scalar's set
/// bits act as the write slice mask.
pub fn or_scalar_where(core: &mut CoreState, dst: Reg, scalar_slices: u16, where_: Lane) -> Result<(), SimError> {
    core.run_fragment(&or_scalar_where_frag(dst, scalar_slices, where_))
}

/// Adder listing. `invert_b` adds `~b` instead of `b` (used for subtraction);
/// with `borrow_out` the carry is stored complemented.
#[allow(clippy::too_many_arguments)]
pub fn adder_frag(
    kind: AdderKind,
    dst: Reg,
    a: Reg,
    b: Reg,
    cin: CarryIn,
    cout: Lane,
    invert_b: bool,
    borrow_out: bool,
) -> Fragment {
    match kind {
        AdderKind::Ripple => ripple_frag(dst, a, b, cin, cout, invert_b, borrow_out),
        AdderKind::CarrySelect => carry_select_frag(dst, a, b, cin, cout, invert_b, borrow_out),
    }
}

/// Bit-serial ripple carry. Per bit: the sum is written, then the carry-out
/// is rebuilt as `ab + b·cin + a·cin` into RL of that slice, where the next
/// bit picks it up through `RL_N`. The carry into bit 0 comes from GVL.
fn ripple_frag(dst: Reg, a: Reg, b: Reg, cin: CarryIn, cout: Lane, invert_b: bool, borrow_out: bool) -> Fragment {
    let mut f = Fragment::with_capacity("vadd_ripple", 216);
    // Sums are written slice by slice while higher slices of the sources are
    // still needed, so an aliased destination goes through T2.
    let aliased = dst == a || dst == b;
    let out = if aliased { T2 } else { dst };
    // The b operand as seen by the adder; inversion is staged through T3.
    let b = if invert_b {
        f.push(MicroOp::rl(ALL, vr(b)));
        f.push(MicroOp::write(ALL, T3, Source::RL.inv()));
        T3
    } else {
        b
    };
    carry_to_gvl(&mut f, cin);
    for bit in 0..16 {
        let m = SliceMask::bit(bit);
        let carry = if bit == 0 { Source::GVL } else { Source::RL_N };
        // sum = a ^ b ^ carry
        f.push(MicroOp::rl2(m, vr(a), Xor, carry));
        f.push(MicroOp::rl_acc(m, Xor, vr(b)));
        f.push(MicroOp::write(m, out, Source::RL));
        // carry-out = a·b + b·carry + a·carry
        f.push(MicroOp::rl(m, Source::vr2(a, b)));
        f.push(MicroOp::write(m, T0, Source::RL));
        if bit == 0 {
            f.push(MicroOp::rl2(m, vr(b), And, Source::GVL));
        } else {
            // RL of this slice was just overwritten, but RL_N still holds
            // the incoming carry.
            f.push(MicroOp::rl(m, vr(b)));
            f.push(MicroOp::rl_acc(m, And, Source::RL_N));
        }
        f.push(MicroOp::write(m, T1, Source::RL));
        if bit == 0 {
            f.push(MicroOp::rl2(m, vr(a), And, Source::GVL));
        } else {
            f.push(MicroOp::rl(m, vr(a)));
            f.push(MicroOp::rl_acc(m, And, Source::RL_N));
        }
        f.push(MicroOp::rl_acc(m, Or, vr(T0)));
        f.push(MicroOp::rl_acc(m, Or, vr(T1)));
    }
    f.push(MicroOp::gvl(SliceMask::MSB));
    let carry = if borrow_out { Source::GVL.inv() } else { Source::GVL };
    f.push(MicroOp::write(mask_lane(cout), MASK_REG, carry));
    if aliased {
        f.push(MicroOp::rl(ALL, vr(T2)));
        f.push(MicroOp::write(ALL, dst, Source::RL));
    }
    f
}

/// Carry-select adder over four 4-bit groups.
///
/// Generate/propagate vectors go to `T0`/`T1`. Group-local carry chains for
/// carry-in 0 are rippled in all four groups at once (mask `0x1111 << i`)
/// and parked in `T2`; the carry-in 1 chains are left in RL. The groups are
/// then resolved low to high, each group's carry-in broadcast on GVL, and
/// the sum is `P ^ RL_N` over the selected carries. Sources are read only
/// in the first few ops, so `dst` may alias either operand.
fn carry_select_frag(dst: Reg, a: Reg, b: Reg, cin: CarryIn, cout: Lane, invert_b: bool, borrow_out: bool) -> Fragment {
    let mut f = Fragment::with_capacity("vadd_carry_select", 42);
    let (g, p, c0) = (T0, T1, T2);
    if invert_b {
        f.push(MicroOp::rl(ALL, vr(b)));
        f.push(MicroOp::rl2(ALL, vr(a), And, Source::RL.inv()));
        f.push(MicroOp::write(ALL, g, Source::RL));
        f.push(MicroOp::rl(ALL, vr(b)));
        f.push(MicroOp::rl2(ALL, vr(a), Xor, Source::RL.inv()));
        f.push(MicroOp::write(ALL, p, Source::RL));
    } else {
        f.push(MicroOp::rl(ALL, Source::vr2(a, b)));
        f.push(MicroOp::write(ALL, g, Source::RL));
        f.push(MicroOp::rl(ALL, vr(a)));
        f.push(MicroOp::rl_acc(ALL, Xor, vr(b)));
        f.push(MicroOp::write(ALL, p, Source::RL));
    }
    let group_lsb = SliceMask(0x1111);
    // carry-in 0 chains
    f.push(MicroOp::rl(group_lsb, vr(g)));
    for i in 1..4 {
        let m = group_lsb.shifted(i);
        f.push(MicroOp::rl2(m, vr(p), And, Source::RL_N));
        f.push(MicroOp::rl_acc(m, Or, vr(g)));
    }
    f.push(MicroOp::write(ALL, c0, Source::RL));
    carry_to_gvl(&mut f, cin);
    // bit 0 of the sum needs the external carry, which is on GVL right now
    f.push(MicroOp::rl2(SliceMask::LSB, vr(p), Xor, Source::GVL));
    f.push(MicroOp::write(SliceMask::LSB, dst, Source::RL));
    // carry-in 1 chains, kept in RL
    f.push(MicroOp::rl(group_lsb, vr(g)));
    f.push(MicroOp::rl_acc(group_lsb, Or, vr(p)));
    for i in 1..4 {
        let m = group_lsb.shifted(i);
        f.push(MicroOp::rl2(m, vr(p), And, Source::RL_N));
        f.push(MicroOp::rl_acc(m, Or, vr(g)));
    }
    // resolve groups low to high; GVL carries each group's carry-in
    for grp in 0..4 {
        let m = SliceMask(0x000F << (4 * grp));
        f.push(MicroOp::rl_acc(m, And, Source::GVL));
        f.push(MicroOp::rl_acc2(m, Or, vr(c0), And, Source::GVL.inv()));
        f.push(MicroOp::gvl(SliceMask::bit(4 * grp + 3)));
    }
    let carry = if borrow_out { Source::GVL.inv() } else { Source::GVL };
    f.push(MicroOp::write(mask_lane(cout), MASK_REG, carry));
    let upper = SliceMask(0xFFFE);
    f.push(MicroOp::rl2(upper, vr(p), Xor, Source::RL_N));
    f.push(MicroOp::write(upper, dst, Source::RL));
    f
}

/// `dst = a + b + cin (mod 2^16)`, carry out of bit 15 into `cout`.
pub fn vadd_vv(
    core: &mut CoreState,
    kind: AdderKind,
    dst: Reg,
    a: Reg,
    b: Reg,
    cin: Option<Lane>,
    cout: Lane,
) -> Result<(), SimError> {
    core.run_fragment(&adder_frag(kind, dst, a, b, cin.into(), cout, false, false))
}

/// `dst = a - b (mod 2^16)` as `a + ~b + 1`; `borrow` is set where `a < b`.
pub fn vsub_vv(core: &mut CoreState, kind: AdderKind, dst: Reg, a: Reg, b: Reg, borrow: Lane) -> Result<(), SimError> {
    core.run_fragment(&adder_frag(kind, dst, a, b, CarryIn::One, borrow, true, true))
}

pub fn vlt_frag(kind: AdderKind, a: Reg, b: Reg, out: Lane) -> Fragment {
    // the scratch difference must avoid the temps each adder uses internally
    let scratch = match kind {
        AdderKind::Ripple => T2,
        AdderKind::CarrySelect => T3,
    };
    let mut f = adder_frag(kind, scratch, a, b, CarryIn::One, out, true, true);
    f.name = "vlt_vv";
    f
}

/// Unsigned `a < b`, from the borrow of `a - b`. Clobbers the temporaries.
pub fn vlt_vv(core: &mut CoreState, kind: AdderKind, a: Reg, b: Reg, out: Lane) -> Result<(), SimError> {
    core.run_fragment(&vlt_frag(kind, a, b, out))
}

pub fn lsl_with_carry_frag(vr_: Reg, shift_in: Option<Lane>, shifted_out: Lane) -> Fragment {
    let mut f = Fragment::with_capacity("lsl_with_carry", 7);
    match shift_in {
        Some(l) => carry_to_gvl(&mut f, CarryIn::Lane(l)),
        None => carry_to_gvl(&mut f, CarryIn::Zero),
    }
    f.push(MicroOp::rl(ALL, vr(vr_)));
    f.push(MicroOp::write(SliceMask(0xFFFE), vr_, Source::RL_N));
    f.push(MicroOp::write(SliceMask::LSB, vr_, Source::GVL));
    // RL still holds the unshifted value: save bit 15
    f.push(MicroOp::gvl(SliceMask::MSB));
    f.push(MicroOp::write(mask_lane(shifted_out), MASK_REG, Source::GVL));
    f
}

/// Shifts every element left one bit, filling bit 0 from `shift_in` (0 if
/// `None`) and saving the old bit 15 into `shifted_out`. The two lanes may be
/// the same.
pub fn lsl_with_carry(core: &mut CoreState, vr_: Reg, shift_in: Option<Lane>, shifted_out: Lane) -> Result<(), SimError> {
    core.run_fragment(&lsl_with_carry_frag(vr_, shift_in, shifted_out))
}

pub fn save_last_bit_frag(out: Lane) -> Fragment {
    let mut f = Fragment::with_capacity("save_last_bit", 2);
    f.push(MicroOp::gvl(SliceMask::MSB));
    f.push(MicroOp::write(mask_lane(out), MASK_REG, Source::GVL));
    f
}

/// Saves bit 15 of whatever is currently on RL into a mask lane.
pub fn save_last_bit(core: &mut CoreState, out: Lane) -> Result<(), SimError> {
    core.run_fragment(&save_last_bit_frag(out))
}

pub fn extract_bit_frag(vr_: Reg, bit: usize, out: Lane) -> Fragment {
    let mut f = Fragment::with_capacity("extract_bit", 3);
    let m = SliceMask::bit(bit);
    f.push(MicroOp::rl(m, vr(vr_)));
    f.push(MicroOp::gvl(m));
    f.push(MicroOp::write(mask_lane(out), MASK_REG, Source::GVL));
    f
}

/// `out[c]` = bit `bit` of element `c`.
pub fn extract_bit(core: &mut CoreState, vr_: Reg, bit: usize, out: Lane) -> Result<(), SimError> {
    assert!(bit < 16, "bit index {bit} out of range");
    core.run_fragment(&extract_bit_frag(vr_, bit, out))
}

pub fn mask_to_01_frag(m: Lane, dst: Reg) -> Fragment {
    let mut f = Fragment::with_capacity("mask_to_01", 4);
    f.push(MicroOp::rl(mask_lane(m), vr(MASK_REG)));
    f.push(MicroOp::gvl(mask_lane(m)));
    f.push(MicroOp::write(SliceMask::LSB, dst, Source::GVL));
    f.push(MicroOp::write(SliceMask(0xFFFE), dst, Source::ZERO));
    f
}

/// `dst[c] = 1` where the mask is set, else 0.
pub fn mask_to_01(core: &mut CoreState, m: Lane, dst: Reg) -> Result<(), SimError> {
    core.run_fragment(&mask_to_01_frag(m, dst))
}

pub fn broadcast_bit_frag(m: Lane, dst: Reg) -> Fragment {
    let mut f = Fragment::with_capacity("broadcast_bit", 3);
    f.push(MicroOp::rl(mask_lane(m), vr(MASK_REG)));
    f.push(MicroOp::gvl(mask_lane(m)));
    f.push(MicroOp::write(ALL, dst, Source::GVL));
    f
}

/// `dst[c] = 0xFFFF` where the mask is set, else 0.
pub fn broadcast_bit(core: &mut CoreState, m: Lane, dst: Reg) -> Result<(), SimError> {
    core.run_fragment(&broadcast_bit_frag(m, dst))
}

pub fn vcopy_masked_frag(dst: Reg, src: Reg, m: Lane) -> Fragment {
    let mut f = Fragment::with_capacity("vcopy_masked", 5);
    f.push(MicroOp::rl(mask_lane(m), vr(MASK_REG)));
    f.push(MicroOp::gvl(mask_lane(m)));
    f.push(MicroOp::rl2(ALL, vr(src), And, Source::GVL));
    f.push(MicroOp::rl_acc2(ALL, Or, vr(dst), And, Source::GVL.inv()));
    f.push(MicroOp::write(ALL, dst, Source::RL));
    f
}

/// `dst[c] = src[c]` where the mask is set.
pub fn vcopy_masked(core: &mut CoreState, dst: Reg, src: Reg, m: Lane) -> Result<(), SimError> {
    core.run_fragment(&vcopy_masked_frag(dst, src, m))
}
