//! Directed rounding on binary64 without touching the FPU rounding mode.
//!
//! Basic operations use error-free transformations (TwoSum, FMA residuals) to
//! detect on which side of the exact result the round-to-nearest value fell,
//! then step at most one ULP outward. Transcendental kernels are evaluated in
//! double-double arithmetic with an explicit absolute error bound and rounded
//! in the requested direction from that enclosure.

use std::f64::consts::LN_2;

/// Rounding direction for a computed bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Down,
    Up,
}

/// Below this magnitude products and quotients may lose their FMA residual to
/// underflow, so we fall back to an unconditional one-ULP step.
const TINY: f64 = 1.0e-290;

#[inline]
pub fn step(x: f64, dir: Direction) -> f64 {
    match dir {
        Direction::Down => x.next_down(),
        Direction::Up => x.next_up(),
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Adjust a finite round-to-nearest result `r` whose exact value is
/// `r + residual_sign`.
#[inline]
fn settle(r: f64, residual: f64, dir: Direction) -> f64 {
    match dir {
        Direction::Down if residual < 0.0 => r.next_down(),
        Direction::Up if residual > 0.0 => r.next_up(),
        _ => r,
    }
}

/// Overflow to an infinity that the exact (finite) result never reaches.
#[inline]
fn clamp_overflow(r: f64, dir: Direction) -> f64 {
    match dir {
        Direction::Down if r == f64::INFINITY => f64::MAX,
        Direction::Up if r == f64::NEG_INFINITY => f64::MIN,
        _ => r,
    }
}

/// `a + b` rounded in `dir`. Infinite operands must not have opposite signs.
pub fn add(a: f64, b: f64, dir: Direction) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        return a + b;
    }
    let (s, e) = two_sum(a, b);
    if s.is_infinite() {
        return clamp_overflow(s, dir);
    }
    settle(s, e, dir)
}

pub fn sub(a: f64, b: f64, dir: Direction) -> f64 {
    add(a, -b, dir)
}

/// `a * b` rounded in `dir`, with the interval convention `0 * ±inf = 0`.
pub fn mul(a: f64, b: f64, dir: Direction) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    if a.is_infinite() || b.is_infinite() {
        return a * b;
    }
    let (p, e) = two_prod(a, b);
    if p.is_infinite() {
        return clamp_overflow(p, dir);
    }
    if p.abs() < TINY {
        return step(p, dir);
    }
    settle(p, e, dir)
}

/// `√a` rounded in `dir` for `a ≥ 0`.
pub fn sqrt(a: f64, dir: Direction) -> f64 {
    debug_assert!(a >= 0.0);
    let r = a.sqrt();
    if a == 0.0 || a.is_infinite() {
        return r;
    }
    if a < TINY {
        return step(r, dir).max(0.0);
    }
    settle(r, -r.mul_add(r, -a), dir).max(0.0)
}

/// `a / b` rounded in `dir` for `b != 0`. Conventions: `x / ±inf = 0` for
/// finite `x`; `±inf / finite` is infinite.
pub fn div(a: f64, b: f64, dir: Direction) -> f64 {
    debug_assert!(b != 0.0);
    if a == 0.0 {
        return 0.0;
    }
    if b.is_infinite() {
        if a.is_infinite() {
            // inf / inf: no finite information either way.
            return match dir {
                Direction::Down => f64::NEG_INFINITY,
                Direction::Up => f64::INFINITY,
            };
        }
        return 0.0;
    }
    if a.is_infinite() {
        return a / b;
    }
    let q = a / b;
    if q.is_infinite() {
        return clamp_overflow(q, dir);
    }
    if q.abs() < TINY || b.abs() < TINY {
        return step(q, dir);
    }
    // a - q*b exactly; the true quotient is q + r/b.
    let r = (-q).mul_add(b, a);
    let residual = if b > 0.0 { r } else { -r };
    settle(q, residual, dir)
}

// ---------------------------------------------------------------------------
// Double-double kernels
// ---------------------------------------------------------------------------

/// A double-double value `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::from_f64(q3))
    }

    fn ldexp(self, k: i32) -> Dd {
        let s = pow2(k);
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }
}

fn pow2(k: i32) -> f64 {
    // Split so that each factor stays a normal number.
    if k > 1000 {
        f64::from_bits(((1023 + 1000) as u64) << 52) * pow2(k - 1000)
    } else if k < -1000 {
        f64::from_bits(((1023 - 1000) as u64) << 52) * pow2(k + 1000)
    } else {
        f64::from_bits(((1023 + k) as u64) << 52)
    }
}

const LN2_DD: Dd = Dd {
    hi: LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

/// Relative error bound of the double-double kernels (conservative; the
/// observed error is around 2^-100).
const KERNEL_REL_ERR: f64 = 1.0 / ((1u128 << 88) as f64);
/// Absolute floor covering subnormal results.
const KERNEL_ABS_ERR: f64 = 1.0e-300;
/// Absolute error of `ln` near 1, where the Newton residual cancels.
const LN_ABS_ERR: f64 = 1.0 / ((1u128 << 96) as f64);

/// An enclosure `hi + lo ± err` of an exact real value.
#[derive(Debug, Clone, Copy)]
pub struct Enclosure {
    pub hi: f64,
    pub lo: f64,
    pub err: f64,
}

impl Enclosure {
    fn from_dd(v: Dd, extra_abs: f64) -> Enclosure {
        Enclosure {
            hi: v.hi,
            lo: v.lo,
            err: v.hi.abs() * KERNEL_REL_ERR + KERNEL_ABS_ERR + extra_abs,
        }
    }

    fn exact(x: f64) -> Enclosure {
        Enclosure {
            hi: x,
            lo: 0.0,
            err: 0.0,
        }
    }

    /// Nearest double to the centre of the enclosure.
    pub fn nearest(&self) -> f64 {
        self.hi + self.lo
    }

    /// Largest double below (`Down`) or smallest above (`Up`) every value in
    /// the enclosure.
    pub fn round(&self, dir: Direction) -> f64 {
        if self.hi.is_infinite() {
            return clamp_overflow(self.hi, dir);
        }
        let slack = match dir {
            Direction::Down => sub(self.lo, self.err, Direction::Down),
            Direction::Up => add(self.lo, self.err, Direction::Up),
        };
        add(self.hi, slack, dir)
    }
}

/// Largest argument whose exponential is finite in binary64.
const EXP_OVERFLOW: f64 = 709.782_712_893_384;
/// Below this the exponential is under half the smallest subnormal.
const EXP_UNDERFLOW: f64 = -745.2;

/// `exp(x)` as a double-double; `None` outside the representable range.
fn exp_dd(x: f64) -> Option<Dd> {
    if !(EXP_UNDERFLOW..=EXP_OVERFLOW).contains(&x) {
        return None;
    }
    if x == 0.0 {
        return Some(Dd::ONE);
    }
    let k = (x / LN_2).round();
    // r = x - k ln2, |r| <= ln2/2 + tiny
    let r = Dd::from_f64(x).sub(LN2_DD.mul_f64(k));
    const SQUARINGS: i32 = 6;
    let r = r.ldexp(-SQUARINGS);
    // Taylor series on |r| < 0.0055: 14 terms leave a remainder far below 2^-110.
    let mut sum = Dd::ONE;
    let mut term = Dd::ONE;
    for n in 1..=14 {
        term = term.mul(r).div(Dd::from_f64(n as f64));
        sum = sum.add(term);
    }
    for _ in 0..SQUARINGS {
        sum = sum.mul(sum);
    }
    Some(sum.ldexp(k as i32))
}

/// Natural log of a positive finite double-double.
fn ln_dd(a: Dd) -> Dd {
    debug_assert!(a.hi > 0.0 && a.hi.is_finite());
    // a = m * 2^e with m in [sqrt(1/2), sqrt(2)) so that ln(m) is small.
    let bits = a.hi.to_bits();
    let mut e = ((bits >> 52) & 0x7ff) as i32 - 1023;
    if e == -1023 {
        // subnormal: renormalize first
        let scaled = a.ldexp(600);
        return ln_dd(scaled).sub(LN2_DD.mul_f64(600.0));
    }
    let mut m = a.ldexp(-e);
    if m.hi > std::f64::consts::SQRT_2 {
        m = m.ldexp(-1);
        e += 1;
    }
    // Two Newton steps on exp(y) = m from the libm seed.
    let mut y = Dd::from_f64(m.hi.ln());
    for _ in 0..2 {
        let ey = exp_dd(-y.hi).expect("small argument").mul(exp_neg_lo(y.lo));
        y = y.add(m.mul(ey)).sub(Dd::ONE);
    }
    y.add(LN2_DD.mul_f64(e as f64))
}

/// exp(-lo) for |lo| tiny, to second order.
fn exp_neg_lo(lo: f64) -> Dd {
    Dd::ONE.add(Dd::from_f64(-lo)).add(Dd::from_f64(lo * lo * 0.5))
}

/// Enclosure of `exp(x)` for finite `x`.
pub fn exp_enclosure(x: f64) -> Enclosure {
    if x == 0.0 {
        return Enclosure::exact(1.0);
    }
    match exp_dd(x) {
        Some(v) => Enclosure::from_dd(v, 0.0),
        None if x > 0.0 => Enclosure::exact(f64::INFINITY),
        None => Enclosure {
            hi: 0.0,
            lo: 0.0,
            err: f64::from_bits(1),
        },
    }
}

/// Enclosure of `ln(x)` for finite `x > 0`.
pub fn ln_enclosure(x: f64) -> Enclosure {
    if x == 1.0 {
        return Enclosure::exact(0.0);
    }
    Enclosure::from_dd(ln_dd(Dd::from_f64(x)), LN_ABS_ERR)
}

/// Enclosure of the logistic function `1 / (1 + exp(-x))` for finite `x`.
pub fn sigmoid_enclosure(x: f64) -> Enclosure {
    if x == 0.0 {
        return Enclosure::exact(0.5);
    }
    if x > 0.0 {
        match exp_dd(-x) {
            Some(e) => Enclosure::from_dd(Dd::ONE.div(Dd::ONE.add(e)), 0.0),
            // exp(-x) below the subnormal range: sigma(x) = 1 - tiny.
            None => Enclosure {
                hi: 1.0,
                lo: 0.0,
                err: f64::EPSILON * 0.25,
            },
        }
    } else {
        match exp_dd(x) {
            Some(e) => Enclosure::from_dd(e.div(Dd::ONE.add(e)), 0.0),
            None => Enclosure {
                hi: 0.0,
                lo: 0.0,
                err: f64::from_bits(1),
            },
        }
    }
}

/// Enclosure of the logit `ln(y / (1 - y))` for `0 < y < 1`.
pub fn logit_enclosure(y: f64) -> Enclosure {
    debug_assert!(y > 0.0 && y < 1.0);
    if y == 0.5 {
        return Enclosure::exact(0.0);
    }
    // 1 - y is exact for y >= 1/2 (Sterbenz) and carried as double-double otherwise.
    let (d_hi, d_lo) = two_sum(1.0, -y);
    let ratio = Dd::from_f64(y).div(Dd { hi: d_hi, lo: d_lo });
    Enclosure::from_dd(ln_dd(ratio), LN_ABS_ERR)
}
