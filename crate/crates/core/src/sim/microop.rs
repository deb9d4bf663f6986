//! Micro-operation encoding.
//!
//! One micro-op is a slice mask plus either a read into the read latches, a
//! write into one vector register, or a reduction onto one of the global
//! latches. Reads and writes draw from the same source mux.

use std::fmt;

use super::{Lane, Reg, SimError, SLICES};

/// Selects which of the 16 bit-slices a micro-op touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SliceMask(pub u16);

impl SliceMask {
    pub const ALL: SliceMask = SliceMask(0xFFFF);
    pub const NONE: SliceMask = SliceMask(0);
    pub const MSB: SliceMask = SliceMask(0x8000);
    pub const LSB: SliceMask = SliceMask(0x0001);

    #[inline]
    pub fn bit(slice: usize) -> SliceMask {
        debug_assert!(slice < SLICES);
        SliceMask(1 << slice)
    }

    #[inline]
    pub fn lane(lane: Lane) -> SliceMask {
        SliceMask(1 << lane.index())
    }

    /// `(bm << imm)` form of the mask prefix.
    #[inline]
    pub fn shifted(self, imm: u32) -> SliceMask {
        SliceMask(self.0 << imm)
    }

    #[inline]
    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    #[inline]
    pub fn contains(self, slice: usize) -> bool {
        self.0 >> slice & 1 == 1
    }

    pub fn slices(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..SLICES).filter(move |s| bits >> s & 1 == 1)
    }
}

impl std::ops::Not for SliceMask {
    type Output = SliceMask;
    fn not(self) -> SliceMask {
        SliceMask(!self.0)
    }
}

impl std::ops::BitAnd for SliceMask {
    type Output = SliceMask;
    fn bitand(self, rhs: SliceMask) -> SliceMask {
        SliceMask(self.0 & rhs.0)
    }
}

impl fmt::Display for SliceMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:04X}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolOp {
    And,
    Or,
    Xor,
}

impl BoolOp {
    #[inline(always)]
    pub fn apply(self, a: u64, b: u64) -> u64 {
        match self {
            BoolOp::And => a & b,
            BoolOp::Or => a | b,
            BoolOp::Xor => a ^ b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BoolOp::And => "&",
            BoolOp::Or => "|",
            BoolOp::Xor => "^",
        }
    }
}

/// Latches visible on the source mux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Latch {
    Rl,
    Gvl,
    Ghl,
    /// Read latch of the slice below (bit `s - 1`); 0 at slice 0.
    RlN,
    /// Read latch of the slice above (bit `s + 1`); 0 at slice 15.
    RlS,
    /// Read latch of column `c + 1`, wrapping.
    RlE,
    /// Read latch of column `c - 1`, wrapping.
    RlW,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selector {
    Vrf(Reg),
    /// Dual-row read: the bitline carries the AND of both rows.
    Vrf2(Reg, Reg),
    Latch(Latch),
    Const0,
    Const1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Source {
    pub selector: Selector,
    pub negated: bool,
}

impl Source {
    pub const RL: Source = Source::latch(Latch::Rl);
    pub const GVL: Source = Source::latch(Latch::Gvl);
    pub const GHL: Source = Source::latch(Latch::Ghl);
    pub const RL_N: Source = Source::latch(Latch::RlN);
    pub const RL_S: Source = Source::latch(Latch::RlS);
    pub const RL_E: Source = Source::latch(Latch::RlE);
    pub const RL_W: Source = Source::latch(Latch::RlW);
    pub const ZERO: Source = Source {
        selector: Selector::Const0,
        negated: false,
    };
    pub const ONE: Source = Source {
        selector: Selector::Const1,
        negated: false,
    };

    pub const fn latch(l: Latch) -> Source {
        Source {
            selector: Selector::Latch(l),
            negated: false,
        }
    }

    pub const fn vr(r: Reg) -> Source {
        Source {
            selector: Selector::Vrf(r),
            negated: false,
        }
    }

    pub const fn vr2(a: Reg, b: Reg) -> Source {
        Source {
            selector: Selector::Vrf2(a, b),
            negated: false,
        }
    }

    /// Complemented form of this source.
    pub const fn inv(self) -> Source {
        Source {
            selector: self.selector,
            negated: !self.negated,
        }
    }

    pub fn is_vrf(&self) -> bool {
        matches!(self.selector, Selector::Vrf(_) | Selector::Vrf2(..))
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("~")?;
        }
        match self.selector {
            Selector::Vrf(r) => write!(f, "VRF[{}]", r.index()),
            Selector::Vrf2(a, b) => write!(f, "VRF[{},{}]", a.index(), b.index()),
            Selector::Latch(l) => f.write_str(match l {
                Latch::Rl => "RL",
                Latch::Gvl => "GVL",
                Latch::Ghl => "GHL",
                Latch::RlN => "RL_N",
                Latch::RlS => "RL_S",
                Latch::RlE => "RL_E",
                Latch::RlW => "RL_W",
            }),
            Selector::Const0 => f.write_str("0"),
            Selector::Const1 => f.write_str("1"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    /// `RL = expr`
    ReadAssign,
    /// `RL op= expr`
    ReadAccum(BoolOp),
    /// `VRF[dst] = latch`
    Write(Reg),
    /// `GVL = RL`, AND-reduced over the selected slices of each column.
    GvlAssign,
    /// `GHL = RL`, OR-reduced over all columns of each selected slice.
    GhlAssign,
}

/// One line of microcode.
///
/// `srcs` holds one or two sources; with two, they are combined with `op`.
/// Reads allow at most one VRF-type source (a dual-row read counts as one),
/// writes take a single non-VRF source and the global-latch forms take none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MicroOp {
    pub mask: SliceMask,
    pub kind: OpKind,
    pub srcs: [Option<Source>; 2],
    pub op: BoolOp,
}

impl MicroOp {
    /// `mask: RL = src`
    pub fn rl(mask: SliceMask, src: Source) -> MicroOp {
        MicroOp {
            mask,
            kind: OpKind::ReadAssign,
            srcs: [Some(src), None],
            op: BoolOp::And,
        }
    }

    /// `mask: RL = a op b`
    pub fn rl2(mask: SliceMask, a: Source, op: BoolOp, b: Source) -> MicroOp {
        MicroOp {
            mask,
            kind: OpKind::ReadAssign,
            srcs: [Some(a), Some(b)],
            op,
        }
    }

    /// `mask: RL acc= src`
    pub fn rl_acc(mask: SliceMask, acc: BoolOp, src: Source) -> MicroOp {
        MicroOp {
            mask,
            kind: OpKind::ReadAccum(acc),
            srcs: [Some(src), None],
            op: BoolOp::And,
        }
    }

    /// `mask: RL acc= a op b`
    pub fn rl_acc2(mask: SliceMask, acc: BoolOp, a: Source, op: BoolOp, b: Source) -> MicroOp {
        MicroOp {
            mask,
            kind: OpKind::ReadAccum(acc),
            srcs: [Some(a), Some(b)],
            op,
        }
    }

    /// `mask: VRF[dst] = src`
    pub fn write(mask: SliceMask, dst: Reg, src: Source) -> MicroOp {
        MicroOp {
            mask,
            kind: OpKind::Write(dst),
            srcs: [Some(src), None],
            op: BoolOp::And,
        }
    }

    /// `mask: GVL = RL`
    pub fn gvl(mask: SliceMask) -> MicroOp {
        MicroOp {
            mask,
            kind: OpKind::GvlAssign,
            srcs: [None, None],
            op: BoolOp::And,
        }
    }

    /// `mask: GHL = RL`
    pub fn ghl(mask: SliceMask) -> MicroOp {
        MicroOp {
            mask,
            kind: OpKind::GhlAssign,
            srcs: [None, None],
            op: BoolOp::And,
        }
    }

    pub fn sources(&self) -> impl Iterator<Item = &Source> {
        self.srcs.iter().flatten()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let malformed = |why: &str| Err(SimError::MalformedOp(format!("{self}: {why}")));
        if self.srcs[0].is_none() && self.srcs[1].is_some() {
            return malformed("second source without a first");
        }
        let n = self.sources().count();
        let vrf_reads = self.sources().filter(|s| s.is_vrf()).count();
        match self.kind {
            OpKind::ReadAssign | OpKind::ReadAccum(_) => {
                if n == 0 {
                    return malformed("read without a source");
                }
                if vrf_reads > 1 {
                    return malformed("at most one VRF read per micro-op");
                }
            }
            OpKind::Write(_) => {
                if n != 1 {
                    return malformed("write takes exactly one source");
                }
                if vrf_reads != 0 {
                    return malformed("write source must be a latch or constant");
                }
            }
            OpKind::GvlAssign | OpKind::GhlAssign => {
                if n != 0 {
                    return malformed("global latch assignment reads RL only");
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for MicroOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.mask)?;
        let expr = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            match self.srcs {
                [Some(a), Some(b)] => write!(f, "{a} {} {b}", self.op.symbol()),
                [Some(a), None] => write!(f, "{a}"),
                _ => f.write_str("?"),
            }
        };
        match self.kind {
            OpKind::ReadAssign => {
                f.write_str("RL = ")?;
                expr(f)
            }
            OpKind::ReadAccum(acc) => {
                write!(f, "RL {}= ", acc.symbol())?;
                expr(f)
            }
            OpKind::Write(dst) => {
                write!(f, "VRF[{}] = ", dst.index())?;
                expr(f)
            }
            OpKind::GvlAssign => f.write_str("GVL = RL"),
            OpKind::GhlAssign => f.write_str("GHL = RL"),
        }
    }
}

/// A named, operand-bound sequence of micro-ops issued as one unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub name: &'static str,
    pub ops: Vec<MicroOp>,
}

impl Fragment {
    pub fn new(name: &'static str) -> Fragment {
        Fragment {
            name,
            ops: Vec::new(),
        }
    }

    pub fn with_capacity(name: &'static str, n: usize) -> Fragment {
        Fragment {
            name,
            ops: Vec::with_capacity(n),
        }
    }

    #[inline]
    pub fn push(&mut self, op: MicroOp) -> &mut Self {
        self.ops.push(op);
        self
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "APL_FRAG {}:", self.name)?;
        for op in &self.ops {
            writeln!(f, "  {op};")?;
        }
        Ok(())
    }
}
