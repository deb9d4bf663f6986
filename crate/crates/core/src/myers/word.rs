use std::ops::{BitAnd, BitOr, BitXor, Not, Shl, Shr};

/// Machine word the scalar scorer can run on.
pub trait Word:
    Copy
    + Eq
    + std::fmt::Debug
    + Send
    + Sync
    + BitAnd<Output = Self>
    + BitOr<Output = Self>
    + BitXor<Output = Self>
    + Not<Output = Self>
    + Shl<u32, Output = Self>
    + Shr<u32, Output = Self>
    + 'static
{
    const BITS: usize;
    const ZERO: Self;
    const ONE: Self;

    fn overflowing_add(self, rhs: Self) -> (Self, bool);
    fn from_bool(b: bool) -> Self;
    fn test(self, i: usize) -> bool;

    fn bit(i: usize) -> Self {
        Self::ONE << i as u32
    }

    /// The lowest `n` bits set.
    fn low_ones(n: usize) -> Self;
}

macro_rules! impl_word {
    ($($t:ty),*) => {$(
        impl Word for $t {
            const BITS: usize = <$t>::BITS as usize;
            const ZERO: Self = 0;
            const ONE: Self = 1;

            #[inline]
            fn overflowing_add(self, rhs: Self) -> (Self, bool) {
                <$t>::overflowing_add(self, rhs)
            }

            #[inline]
            fn from_bool(b: bool) -> Self {
                b as $t
            }

            #[inline]
            fn test(self, i: usize) -> bool {
                self >> i & 1 == 1
            }

            fn low_ones(n: usize) -> Self {
                if n >= <Self as Word>::BITS { <$t>::MAX } else { (1 << n) - 1 }
            }
        }
    )*};
}

impl_word!(u16, u32, u64);
