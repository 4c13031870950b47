//! Dedicated contractor for `y = sig(x)` on the extended reals.
//!
//! `sigma` and `sigma_inv` are the sigmoid and its inverse lifted to
//! `[-inf, +inf]`. The forward and backward propagators map the bounds of one
//! argument through these functions, round the images outward and intersect
//! with the other argument.

use crate::interval::rounding::{self, Direction};
use crate::interval::{ExtendedReal, Interval, IntervalError};

/// Lifted sigmoid: `0` at `-inf`, `1 / (1 + e^-x)` on the reals, `1` at `+inf`.
pub fn sigma(x: ExtendedReal) -> Result<ExtendedReal, IntervalError> {
    if x.is_nan() {
        return Err(IntervalError::NaN);
    }
    Ok(match x {
        f64::NEG_INFINITY => 0.0,
        f64::INFINITY => 1.0,
        _ => rounding::sigmoid_enclosure(x).nearest(),
    })
}

/// Lifted inverse: `-inf` for `y <= 0`, `ln(y / (1 - y))` on `(0, 1)`, `+inf`
/// for `y >= 1`.
pub fn sigma_inv(y: ExtendedReal) -> Result<ExtendedReal, IntervalError> {
    if y.is_nan() {
        return Err(IntervalError::NaN);
    }
    Ok(if y <= 0.0 {
        f64::NEG_INFINITY
    } else if y >= 1.0 {
        f64::INFINITY
    } else {
        rounding::logit_enclosure(y).nearest()
    })
}

/// `sigma(x)` rounded in `dir`, kept inside `[0, 1]`. The flag reports that the
/// rounded value is not attained: `sigma` of a finite nonzero float is
/// transcendental, so it never equals a float.
fn sigma_rounded(x: f64, dir: Direction) -> (f64, bool) {
    match x {
        f64::NEG_INFINITY => (0.0, false),
        f64::INFINITY => (1.0, false),
        _ if x == 0.0 => (0.5, false),
        _ => (rounding::sigmoid_enclosure(x).round(dir).clamp(0.0, 1.0), true),
    }
}

/// `sigma_inv(y)` rounded in `dir`, with the same unattained flag: the logit of
/// a float in `(0, 1)` other than `0.5` is irrational.
fn sigma_inv_rounded(y: f64, dir: Direction) -> (f64, bool) {
    if y <= 0.0 {
        (f64::NEG_INFINITY, false)
    } else if y >= 1.0 {
        (f64::INFINITY, false)
    } else if y == 0.5 {
        (0.0, false)
    } else {
        (rounding::logit_enclosure(y).round(dir), true)
    }
}

/// Forward propagation: `Y ∩ sigma(X)`, outward rounded.
///
/// A bound of the image is strict when the matching bound of `X` is strict or
/// infinite, or when rounding moved it off the exact value.
pub fn fwd_prop_sigmoid(x: &Interval, y: &Interval) -> Interval {
    if x.is_empty() || y.is_empty() {
        return Interval::EMPTY;
    }
    let (lo, lo_inexact) = sigma_rounded(x.lo(), Direction::Down);
    let (hi, hi_inexact) = sigma_rounded(x.hi(), Direction::Up);
    let lo_strict = x.lo_strict() || x.lo().is_infinite() || lo_inexact;
    let hi_strict = x.hi_strict() || x.hi().is_infinite() || hi_inexact;
    y.intersect(&Interval::normalized(lo, lo_strict, hi, hi_strict))
}

/// Backward propagation: `X ∩ sigma_inv(Y)`, outward rounded.
///
/// A bound is strict when the matching bound of `Y` is strict or rounding moved
/// it; bounds that map outside `(0, 1)` give infinite preimage bounds.
pub fn bwd_prop_sigmoid(x: &Interval, y: &Interval) -> Interval {
    if x.is_empty() || y.is_empty() {
        return Interval::EMPTY;
    }
    // The preimage of Y is empty when Y misses the open codomain (0, 1).
    if y.intersect(&Interval::open(0.0, 1.0)).is_empty() {
        return Interval::EMPTY;
    }
    let (lo, lo_inexact) = sigma_inv_rounded(y.lo(), Direction::Down);
    let (hi, hi_inexact) = sigma_inv_rounded(y.hi(), Direction::Up);
    x.intersect(&Interval::normalized(lo, y.lo_strict() || lo_inexact, hi, y.hi_strict() || hi_inexact))
}
