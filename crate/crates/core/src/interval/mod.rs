//! Extended-real intervals with independently strict or weak bounds.
//!
//! An [`Interval`] `(lo, lo_strict, hi, hi_strict)` denotes
//! `{ x | lo ⋈₁ x ⋈₂ hi }` with `⋈ ∈ {<, ≤}`. Infinite bounds are always
//! strict, and every empty set is normalized to the single [`Interval::EMPTY`]
//! value. Bounds are binary64; NaN is rejected wherever a bound is produced.

mod arith;
pub mod rounding;

use std::fmt;

pub use rounding::Direction;

/// Real numbers extended with `-inf` and `+inf`, represented as binary64.
/// NaN never appears in a stored bound.
pub type ExtendedReal = f64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntervalError {
    #[error("NaN is not an extended real")]
    NaN,
    #[error("width of the empty interval is undefined")]
    EmptyWidth,
}

#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
    lo_strict: bool,
    hi_strict: bool,
}

impl Interval {
    pub const EMPTY: Interval = Interval {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
        lo_strict: true,
        hi_strict: true,
    };

    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
        lo_strict: true,
        hi_strict: true,
    };

    /// Builds `{x | lo ⋈ x ⋈ hi}`, normalizing infinite bounds to strict and
    /// empty sets to [`Interval::EMPTY`].
    pub fn new(lo: f64, lo_strict: bool, hi: f64, hi_strict: bool) -> Result<Self, IntervalError> {
        if lo.is_nan() || hi.is_nan() {
            return Err(IntervalError::NaN);
        }
        Ok(Self::normalized(lo, lo_strict, hi, hi_strict))
    }

    pub(crate) fn normalized(lo: f64, lo_strict: bool, hi: f64, hi_strict: bool) -> Self {
        debug_assert!(!lo.is_nan() && !hi.is_nan());
        let lo_strict = lo_strict || lo.is_infinite();
        let hi_strict = hi_strict || hi.is_infinite();
        if lo > hi || (lo == hi && (lo_strict || hi_strict)) {
            return Self::EMPTY;
        }
        // -0.0 and 0.0 compare equal; keep a single representation for bit-exact comparisons.
        let lo = if lo == 0.0 { 0.0 } else { lo };
        let hi = if hi == 0.0 { 0.0 } else { hi };
        Interval {
            lo,
            hi,
            lo_strict,
            hi_strict,
        }
    }

    /// `[lo, hi]` (infinite ends become strict).
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::normalized(lo, false, hi, false)
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self::normalized(lo, true, hi, true)
    }

    pub fn point(x: f64) -> Self {
        Self::closed(x, x)
    }

    /// `[lo, +inf)` or `(lo, +inf)`.
    pub fn at_least(lo: f64, strict: bool) -> Self {
        Self::normalized(lo, strict, f64::INFINITY, true)
    }

    /// `(-inf, hi]` or `(-inf, hi)`.
    pub fn at_most(hi: f64, strict: bool) -> Self {
        Self::normalized(f64::NEG_INFINITY, true, hi, strict)
    }

    pub fn lo(&self) -> ExtendedReal {
        self.lo
    }

    pub fn hi(&self) -> ExtendedReal {
        self.hi
    }

    pub fn lo_strict(&self) -> bool {
        self.lo_strict
    }

    pub fn hi_strict(&self) -> bool {
        self.hi_strict
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        if x.is_nan() || self.is_empty() {
            return false;
        }
        let above = if self.lo_strict { x > self.lo } else { x >= self.lo };
        let below = if self.hi_strict { x < self.hi } else { x <= self.hi };
        above && below
    }

    /// Set intersection. On equal finite bounds the strict relation wins.
    pub fn intersect(&self, other: &Interval) -> Interval {
        if self.is_empty() || other.is_empty() {
            return Self::EMPTY;
        }
        let (lo, lo_strict) = if self.lo > other.lo {
            (self.lo, self.lo_strict)
        } else if other.lo > self.lo {
            (other.lo, other.lo_strict)
        } else {
            (self.lo, self.lo_strict || other.lo_strict)
        };
        let (hi, hi_strict) = if self.hi < other.hi {
            (self.hi, self.hi_strict)
        } else if other.hi < self.hi {
            (other.hi, other.hi_strict)
        } else {
            (self.hi, self.hi_strict || other.hi_strict)
        };
        Self::normalized(lo, lo_strict, hi, hi_strict)
    }

    /// Smallest interval containing both arguments.
    pub fn hull(&self, other: &Interval) -> Interval {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        let (lo, lo_strict) = if self.lo < other.lo {
            (self.lo, self.lo_strict)
        } else if other.lo < self.lo {
            (other.lo, other.lo_strict)
        } else {
            (self.lo, self.lo_strict && other.lo_strict)
        };
        let (hi, hi_strict) = if self.hi > other.hi {
            (self.hi, self.hi_strict)
        } else if other.hi > self.hi {
            (other.hi, other.hi_strict)
        } else {
            (self.hi, self.hi_strict && other.hi_strict)
        };
        Self::normalized(lo, lo_strict, hi, hi_strict)
    }

    /// `self ⊆ other` as sets.
    pub fn is_subset(&self, other: &Interval) -> bool {
        if self.is_empty() {
            return true;
        }
        if other.is_empty() {
            return false;
        }
        let lo_ok = self.lo > other.lo || (self.lo == other.lo && (self.lo_strict || !other.lo_strict));
        let hi_ok = self.hi < other.hi || (self.hi == other.hi && (self.hi_strict || !other.hi_strict));
        lo_ok && hi_ok
    }

    /// `hi - lo` rounded up; `+inf` when unbounded, `0` for a point.
    pub fn width(&self) -> Result<ExtendedReal, IntervalError> {
        if self.is_empty() {
            return Err(IntervalError::EmptyWidth);
        }
        Ok(rounding::sub(self.hi, self.lo, Direction::Up))
    }

    /// Split point used by branching: the midpoint of a bounded interval,
    /// `±max(1, 2|b|)` beyond the finite bound `b` of a half-unbounded one, and
    /// `0` for the whole line. `None` when no double strictly separates the
    /// interval into two nonempty parts.
    pub fn split_point(&self) -> Option<f64> {
        if self.is_empty() || self.is_point() {
            return None;
        }
        let s = match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => {
                let m = self.lo / 2.0 + self.hi / 2.0;
                if m.is_finite() {
                    m
                } else {
                    self.lo + (self.hi - self.lo) / 2.0
                }
            }
            (false, true) => -(2.0 * self.hi.abs()).max(1.0),
            (true, false) => (2.0 * self.lo.abs()).max(1.0),
            (false, false) => 0.0,
        };
        let lower = self.intersect(&Interval::at_most(s, false));
        let upper = self.intersect(&Interval::at_least(s, true));
        if !s.is_finite() || lower.is_empty() || upper.is_empty() {
            None
        } else {
            Some(s)
        }
    }

    /// Halves `(self ∩ (-inf, s], self ∩ (s, +inf))` around [`Self::split_point`].
    pub fn bisect(&self) -> Option<(Interval, Interval)> {
        let s = self.split_point()?;
        Some((
            self.intersect(&Interval::at_most(s, false)),
            self.intersect(&Interval::at_least(s, true)),
        ))
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Prints in the constraint-language syntax, e.g. `[0.5, 1)` or `(-inf, 3]`.
impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "empty");
        }
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_strict { '(' } else { '[' },
            fmt_bound(self.lo),
            fmt_bound(self.hi),
            if self.hi_strict { ')' } else { ']' }
        )
    }
}

/// Shortest round-trip decimal form, with `-inf`/`+inf` for infinities.
pub fn fmt_bound(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:?}")
    }
}

/// One-ULP outward step applied to a computed value that may carry up to one
/// ULP of library error. Infinities are returned unchanged.
pub fn round_out(x: f64, direction: Direction) -> Result<ExtendedReal, IntervalError> {
    if x.is_nan() {
        return Err(IntervalError::NaN);
    }
    if x.is_infinite() {
        return Ok(x);
    }
    Ok(rounding::step(x, direction))
}

/// Identifier of a variable in a constraint system; indexes an [`IntervalBox`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// The current search region: one interval per variable of a system.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBox {
    intervals: Vec<Interval>,
}

impl IntervalBox {
    pub fn new(intervals: Vec<Interval>) -> Self {
        IntervalBox { intervals }
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn get(&self, v: VarId) -> Interval {
        self.intervals[v.0]
    }

    pub fn set(&mut self, v: VarId, value: Interval) {
        self.intervals[v.0] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, Interval)> + '_ {
        self.intervals.iter().enumerate().map(|(i, iv)| (VarId(i), *iv))
    }

    pub fn as_slice(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn contains_point(&self, point: &[f64]) -> bool {
        point.len() == self.intervals.len() && self.intervals.iter().zip(point).all(|(iv, &x)| iv.contains(x))
    }
}
