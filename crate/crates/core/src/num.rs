//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the models are generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Default
        + Debug
        + Display
        + LowerExp
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a count into the working scalar.
#[inline]
pub fn from_usize<F: Real>(n: usize) -> F {
    F::from_usize(n).expect("count representable in scalar type")
}

/// Elementary charge in coulombs (exact SI value).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Neumaier compensated sum. Used wherever a ratio of sums must be stable
/// under rescaling of the summands.
pub fn compensated_sum<F: Real, I: IntoIterator<Item = F>>(values: I) -> F {
    let mut sum = F::zero();
    let mut comp = F::zero();
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp = comp + ((sum - t) + x);
        } else {
            comp = comp + ((x - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_diff<F: Real>(a: F, b: F) -> F {
    let scale = a.abs().max(b.abs());
    if scale == F::zero() {
        F::zero()
    } else {
        (a - b).abs() / scale
    }
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace<F: Real>(start: F, stop: F, n: usize) -> Vec<F> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / from_usize::<F>(n - 1);
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        stop
                    } else {
                        start + step * from_usize(i)
                    }
                })
                .collect()
        }
    }
}
