//! Scalar abstraction shared by the analytical code.
//!
//! Every formula evaluator is generic over [`Real`], so the same code runs in
//! `f64` (the default everywhere) and `f32` (useful for cross-checking how
//! sensitive an expression is to rounding).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by catalogs, placement distributions and bounds.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + Sum + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold,
    /// which never happens for the finite constants used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).expect("usize fits a float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + Sum
        + 'static
{
}

/// Kahan-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum<F> {
    sum: F,
    compensation: F,
}

impl<F: Real> KahanSum<F> {
    pub fn new() -> Self {
        Self {
            sum: F::zero(),
            compensation: F::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: F) {
        let y = x - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> F {
        self.sum
    }
}

impl<F: Real> Extend<F> for KahanSum<F> {
    fn extend<I: IntoIterator<Item = F>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of an iterator.
pub fn kahan_sum<F: Real, I: IntoIterator<Item = F>>(iter: I) -> F {
    let mut acc = KahanSum::new();
    acc.extend(iter);
    acc.value()
}

/// Prefix sums with compensation: `out[k] = x[0] + ... + x[k-1]`, length `len + 1`.
pub fn prefix_sums<F: Real>(xs: &[F]) -> Vec<F> {
    let mut out = Vec::with_capacity(xs.len() + 1);
    let mut acc = KahanSum::new();
    out.push(F::zero());
    for &x in xs {
        acc.add(x);
        out.push(acc.value());
    }
    out
}
