//! Outward-rounded interval arithmetic.

use super::rounding::{self, Direction};
use super::Interval;

/// A candidate extreme: value rounded in the relevant direction and whether
/// the exact extreme is excluded from the set.
#[derive(Clone, Copy)]
struct Extreme {
    value: f64,
    strict: bool,
}

fn lowest(cands: &[Extreme]) -> Extreme {
    let value = cands.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
    let strict = cands.iter().filter(|c| c.value == value).all(|c| c.strict);
    Extreme { value, strict }
}

fn highest(cands: &[Extreme]) -> Extreme {
    let value = cands.iter().map(|c| c.value).fold(f64::NEG_INFINITY, f64::max);
    let strict = cands.iter().filter(|c| c.value == value).all(|c| c.strict);
    Extreme { value, strict }
}

impl Interval {
    pub fn neg(&self) -> Interval {
        if self.is_empty() {
            return Interval::EMPTY;
        }
        Interval::normalized(-self.hi, self.hi_strict, -self.lo, self.lo_strict)
    }

    pub fn add(&self, other: &Interval) -> Interval {
        if self.is_empty() || other.is_empty() {
            return Interval::EMPTY;
        }
        Interval::normalized(
            rounding::add(self.lo, other.lo, Direction::Down),
            self.lo_strict || other.lo_strict,
            rounding::add(self.hi, other.hi, Direction::Up),
            self.hi_strict || other.hi_strict,
        )
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.add(&other.neg())
    }

    pub fn add_scalar(&self, c: f64) -> Interval {
        self.add(&Interval::point(c))
    }

    /// `c · self` for finite `c`.
    pub fn scale(&self, c: f64) -> Interval {
        if self.is_empty() {
            return Interval::EMPTY;
        }
        if c == 0.0 {
            return Interval::point(0.0);
        }
        let lo = Extreme {
            value: rounding::mul(c, self.lo, if c > 0.0 { Direction::Down } else { Direction::Up }),
            strict: self.lo_strict,
        };
        let hi = Extreme {
            value: rounding::mul(c, self.hi, if c > 0.0 { Direction::Up } else { Direction::Down }),
            strict: self.hi_strict,
        };
        if c > 0.0 {
            Interval::normalized(lo.value, lo.strict, hi.value, hi.strict)
        } else {
            Interval::normalized(hi.value, hi.strict, lo.value, lo.strict)
        }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        if self.is_empty() || other.is_empty() {
            return Interval::EMPTY;
        }
        let a = [(self.lo, self.lo_strict), (self.hi, self.hi_strict)];
        let b = [(other.lo, other.lo_strict), (other.hi, other.hi_strict)];
        let mut lows = [Extreme { value: 0.0, strict: false }; 4];
        let mut highs = lows;
        let mut k = 0;
        for &(x, xs) in &a {
            for &(y, ys) in &b {
                // An attained zero factor pins the product to zero whatever the other factor is.
                let strict = if (x == 0.0 && !xs) || (y == 0.0 && !ys) { false } else { xs || ys };
                lows[k] = Extreme {
                    value: rounding::mul(x, y, Direction::Down),
                    strict,
                };
                highs[k] = Extreme {
                    value: rounding::mul(x, y, Direction::Up),
                    strict,
                };
                k += 1;
            }
        }
        let lo = lowest(&lows);
        let hi = highest(&highs);
        Interval::normalized(lo.value, lo.strict, hi.value, hi.strict)
    }

    /// Image of `x ↦ x²`, nonnegative even when `self` straddles zero.
    pub fn square(&self) -> Interval {
        self.mul(self).intersect(&Interval::at_least(0.0, false))
    }

    /// Values in `self` whose square lies in `y`. Bounds of the result are weak.
    pub fn square_preimage(&self, y: &Interval) -> Interval {
        let y = y.intersect(&Interval::at_least(0.0, false));
        if self.is_empty() || y.is_empty() {
            return Interval::EMPTY;
        }
        let root = Interval::closed(rounding::sqrt(y.lo, Direction::Down), rounding::sqrt(y.hi, Direction::Up));
        self.intersect(&root).hull(&self.intersect(&root.neg()))
    }

    /// Interval quotient `self / divisor`, returning the hull of both branches
    /// when the divisor straddles zero. Bounds of the result are weak.
    pub fn div(&self, divisor: &Interval) -> Interval {
        if self.is_empty() || divisor.is_empty() {
            return Interval::EMPTY;
        }
        if divisor.contains(0.0) && self.contains(0.0) {
            return Interval::ENTIRE;
        }
        let neg = divisor.intersect(&Interval::at_most(0.0, true));
        let pos = divisor.intersect(&Interval::at_least(0.0, true));
        let q_neg = if neg.is_empty() { Interval::EMPTY } else { self.div_signed(&neg, -1.0) };
        let q_pos = if pos.is_empty() { Interval::EMPTY } else { self.div_signed(&pos, 1.0) };
        q_neg.hull(&q_pos)
    }

    /// Quotient by a divisor lying entirely on one side of zero (`side` = ±1);
    /// a zero bound of the divisor is excluded.
    fn div_signed(&self, divisor: &Interval, side: f64) -> Interval {
        let ys = [self.lo, self.hi];
        let xs = [divisor.lo, divisor.hi];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &y in &ys {
            for &x in &xs {
                let (d, u) = if x == 0.0 {
                    // y / 0± as a limit from the divisor's side.
                    if y == 0.0 {
                        (0.0, 0.0)
                    } else {
                        let inf = f64::INFINITY * y.signum() * side;
                        (inf, inf)
                    }
                } else {
                    (rounding::div(y, x, Direction::Down), rounding::div(y, x, Direction::Up))
                };
                lo = lo.min(d);
                hi = hi.max(u);
            }
        }
        Interval::normalized(lo, false, hi, false)
    }

    /// Image under `exp`.
    pub fn exp(&self) -> Interval {
        if self.is_empty() {
            return Interval::EMPTY;
        }
        let lo = if self.lo == f64::NEG_INFINITY {
            0.0
        } else {
            rounding::exp_enclosure(self.lo).round(Direction::Down).max(0.0)
        };
        let hi = if self.hi == f64::INFINITY {
            f64::INFINITY
        } else {
            rounding::exp_enclosure(self.hi).round(Direction::Up)
        };
        // exp never attains 0.
        let lo_strict = self.lo_strict || lo == 0.0;
        Interval::normalized(lo, lo_strict, hi, self.hi_strict)
    }

    /// Preimage under `exp`: `{x | exp(x) ∈ self}`.
    pub fn ln(&self) -> Interval {
        let y = self.intersect(&Interval::at_least(0.0, true));
        if y.is_empty() {
            return Interval::EMPTY;
        }
        let lo = if y.lo == 0.0 {
            f64::NEG_INFINITY
        } else {
            rounding::ln_enclosure(y.lo).round(Direction::Down)
        };
        let hi = if y.hi == f64::INFINITY {
            f64::INFINITY
        } else {
            rounding::ln_enclosure(y.hi).round(Direction::Up)
        };
        Interval::normalized(lo, y.lo_strict, hi, y.hi_strict)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn addition_is_outward() {
        let a = Interval::closed(0.1, 0.2);
        let s = a.add(&a);
        assert!(s.lo() <= 0.2 && s.hi() >= 0.4);
        assert!(s.contains(0.1 + 0.1) && s.contains(0.2 + 0.2));
        let exact = Interval::closed(0.0, 0.5).add(&Interval::closed(0.0, 0.5));
        assert_eq!(exact, Interval::closed(0.0, 1.0));
    }

    #[test]
    fn scale_flips_for_negative_coefficients() {
        let x = Interval::new(1.0, true, 2.0, false).unwrap();
        assert_eq!(x.scale(-2.0), Interval::new(-4.0, false, -2.0, true).unwrap());
        assert_eq!(x.scale(0.0), Interval::point(0.0));
    }

    #[test]
    fn mul_handles_signs_and_infinities() {
        let a = Interval::closed(-1.0, 2.0);
        let b = Interval::closed(3.0, 4.0);
        assert_eq!(a.mul(&b), Interval::closed(-4.0, 8.0));
        let c = Interval::closed(0.0, 1.0).mul(&Interval::at_least(1.0, false));
        assert_eq!(c, Interval::at_least(0.0, false));
        let d = Interval::new(0.0, true, 1.0, false).unwrap().mul(&Interval::at_least(1.0, false));
        assert_eq!(d, Interval::at_least(0.0, true));
    }

    #[test]
    fn div_hull_through_zero() {
        let y = Interval::point(1.0);
        assert_eq!(y.div(&Interval::closed(1.0, 2.0)), Interval::closed(0.5, 1.0));
        // 1 / [0, 2] = [0.5, +inf)
        assert_eq!(y.div(&Interval::closed(0.0, 2.0)), Interval::at_least(0.5, false));
        // 1 / [-1, 2]: branches (-inf, -1] and [0.5, +inf), hull is everything
        assert_eq!(y.div(&Interval::closed(-1.0, 2.0)), Interval::ENTIRE);
        assert_eq!(Interval::closed(-1.0, 1.0).div(&Interval::closed(-1.0, 1.0)), Interval::ENTIRE);
        assert_eq!(Interval::closed(0.0, 1.0).div(&Interval::at_least(0.0, true)), Interval::at_least(0.0, false));
        assert!(y.div(&Interval::point(0.0)).is_empty());
    }

    #[test]
    fn exp_and_ln() {
        let e = Interval::point(0.0).exp();
        assert_eq!(e, Interval::point(1.0));
        let whole = Interval::ENTIRE.exp();
        assert_eq!(whole, Interval::at_least(0.0, true));
        assert!(Interval::closed(-2.0, 0.0).ln().is_empty());
        assert!(Interval::closed(-2.0, -1.0).ln().is_empty());
        let l = Interval::closed(0.0, 1.0).ln();
        assert_eq!(l, Interval::closed(f64::NEG_INFINITY, 0.0));
    }
}
