//! Floating-point scalar abstraction shared by the image-processing kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar usable for soft predictions, colour data and filter weights.
///
/// Implemented for `f32` (storage and the fast paths) and `f64` (reference computations).
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; constants in the kernels are written as `f64`.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }

    /// Smallest representable value strictly greater than `self` (finite, non-negative inputs).
    fn next_above(self) -> Self;

    /// `(n, 2^n)` with `n` the integer nearest to `t`, for `|t| <= 120`. Other inputs give
    /// unspecified (but not undefined) results.
    fn round_pow2(t: Self) -> (Self, Self);

    /// `exp(x)` for `x` in `[-80, 0]`, built from vectorizable operations only.
    /// The polynomial is accurate to 1e-11; in `f32` the argument reduction adds a
    /// relative error of about `1e-7 * |x|`.
    #[inline(always)]
    fn exp_nonpositive(x: Self) -> Self {
        // e^x = 2^n * e^(u ln 2) with n = round(x log2 e) and |u| <= 0.5
        let t = x * Self::of(std::f64::consts::LOG2_E);
        let (n, pow) = Self::round_pow2(t);
        let y = (t - n) * Self::of(std::f64::consts::LN_2);
        let mut p = Self::of(1.0 / 362_880.0);
        for c in [40_320.0, 5_040.0, 720.0, 120.0, 24.0, 6.0, 2.0, 1.0, 1.0] {
            p = p * y + Self::of(1.0 / c);
        }
        p * pow
    }
}

impl Scalar for f32 {
    fn next_above(self) -> Self {
        self.next_up()
    }

    #[inline(always)]
    fn round_pow2(t: Self) -> (Self, Self) {
        // adding 1.5 * 2^mantissa_bits rounds to an integer held in the low mantissa bits
        const MAGIC: f32 = 12_582_912.0;
        let shifted = t + MAGIC;
        let n = (shifted.to_bits() as i32).wrapping_sub(MAGIC.to_bits() as i32);
        let pow = f32::from_bits((n.wrapping_add(127) as u32).wrapping_shl(23));
        (shifted - MAGIC, pow)
    }
}

impl Scalar for f64 {
    fn next_above(self) -> Self {
        self.next_up()
    }

    #[inline(always)]
    fn round_pow2(t: Self) -> (Self, Self) {
        // adding 1.5 * 2^mantissa_bits rounds to an integer held in the low mantissa bits
        const MAGIC: f64 = 6_755_399_441_055_744.0;
        let shifted = t + MAGIC;
        let n = (shifted.to_bits() as i64).wrapping_sub(MAGIC.to_bits() as i64);
        let pow = f64::from_bits((n.wrapping_add(1023) as u64).wrapping_shl(52));
        (shifted - MAGIC, pow)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn next_above_is_strictly_greater_and_adjacent() {
        for v in [0.0f32, 0.3, 1.0 / 19.0, 1.0] {
            let n = v.next_above();
            assert!(n > v);
            assert_eq!(n.to_bits() - v.to_bits(), 1);
        }
        assert!(0.3f64.next_above() > 0.3);
        assert!((-1.0f64).next_above() > -1.0);
    }

    #[test]
    fn fast_exp_matches_std() {
        let mut x = 0.0f64;
        while x > -80.0 {
            let want = x.exp();
            assert!((f64::exp_nonpositive(x) - want).abs() <= want * 2e-9, "{x}");
            let got32 = f32::exp_nonpositive(x as f32) as f64;
            let want32 = (x as f32 as f64).exp();
            // f32 argument reduction loses about |x| ulps
            assert!((got32 - want32).abs() <= want32 * 2e-7 * (1.0 + x.abs()), "{x}");
            x -= 0.0371;
        }
        assert_eq!(f64::exp_nonpositive(0.0), 1.0);
    }
}
