//! Closed-form delay evaluators.
//!
//! A request for content `i` checks the caches on its path one by one; with
//! per-cache hit probability `h` and routing distance `d` its expected hop
//! count is `xi(h, d)`. Averaging over popularity gives `Delta(d)` and
//! averaging over the distance distribution gives the network delay.

mod bounds;
mod fit;
mod report;

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::scalar::{kahan_sum, Real};
use crate::topology::DistanceModel;

pub use bounds::{
    bow_black_budget, bow_composite_bound, bow_sweep, policy_bound, policy_bound_with,
    ppp_bound_at, prescribed_tpp_cut, tpp_bound_at, AlphaRegime, BoundPolicy, BoundReport,
    BowPoint,
};
pub use fit::{fit_scaling_exponent, CurveAxis, DelayCurve, ScalingFit, TRIM_FRACTION};
pub use report::{read_rows, write_rows, write_rows_to, Metric, ResultRow, ValueKind};

/// Expected hops until the first hit when each of the `d - 1` on-path caches
/// holds the content independently with probability `h` and the server sits
/// at hop `d`: `(1 - (1 - h)^d) / h`, or `d` when `h = 0`.
pub fn xi_delay<F: Real>(h: F, d: F) -> F {
    if h <= F::zero() {
        return d;
    }
    (F::one() - (F::one() - h).powf(d)) / h
}

/// `Delta(d) = sum_i p_i xi(h_i, d)`.
pub fn delta_given_distance<F: Real>(cat: &Catalog<F>, h: &[F], d: F) -> Result<F> {
    if h.len() != cat.len() {
        return Err(Error::LengthMismatch {
            expected: cat.len(),
            actual: h.len(),
        });
    }
    Ok(kahan_sum(
        cat.popularity()
            .iter()
            .zip(h)
            .rev()
            .map(|(&p, &hi)| p * xi_delay(hi, d)),
    ))
}

/// `sum_d f_d delta(d)`.
pub fn average_delay<F: Real>(dm: &DistanceModel<F>, delta: impl Fn(F) -> F) -> F {
    kahan_sum(
        dm.iter()
            .map(|(d, f)| f * delta(F::from_u32(d).expect("distance fits"))),
    )
}

/// `delta(d_bar)`: an upper bound on [`average_delay`] whenever `delta` is
/// concave in `d`.
pub fn jensen_upper<F: Real>(d_bar: F, delta: impl Fn(F) -> F) -> F {
    delta(d_bar)
}

/// URP delay at distance `d`: `(|C|/s)(1 - (1 - s/|C|)^d)`. Budgets at or
/// above `|C|` cache everything and give exactly 1.
pub fn urp_delay<F: Real>(content_count: usize, s: usize, d: F) -> F {
    let s = s.min(content_count);
    if s == 0 {
        return d;
    }
    let ratio = F::from_usize_lossy(s) / F::from_usize_lossy(content_count);
    (F::one() - (F::one() - ratio).powf(d)) / ratio
}
