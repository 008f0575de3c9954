//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};

/// Floating point scalar: `f32` or `f64`.
///
/// All tolerances quoted in the tests assume `f64`; `f32` works through the
/// same code paths with proportionally looser accuracy.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumCast
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`. Never fails for finite input.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as NumCast>::from(v).unwrap_or_else(Self::nan)
    }

    /// Lossy conversion from a count or index.
    #[inline]
    fn of_usize(v: usize) -> Self {
        <Self as NumCast>::from(v).unwrap_or_else(Self::nan)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Cast a whole slice between scalar types.
pub fn cast_slice<S: Real, T: Real>(v: &[S]) -> Vec<T> {
    v.iter().map(|&x| T::of(x.as_f64())).collect()
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn sigmoid<T: Real>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

/// `σ'(v) = σ(v)·σ(−v)`; unlike `s·(1 − s)` this stays nonzero when `σ(v)`
/// rounds to one.
pub(crate) fn sigmoid_derivative<T: Real>(v: T) -> T {
    sigmoid(v) * sigmoid(-v)
}
