//! Interval constraint propagation: per-equation contractors and the
//! fixpoint deduction loop.

mod engine;
mod sigmoid;

pub use engine::{deduce, DeduceOutcome, Deducer, Progress, DEADLINE_POLL};
pub use sigmoid::{bwd_prop_sigmoid, fwd_prop_sigmoid, sigma, sigma_inv};

use std::fmt;

use crate::interval::{rounding, Direction, Interval, IntervalBox, VarId};

/// A definitional equation `y = f(...)` in three-address form.
#[derive(Debug, Clone, PartialEq)]
pub enum Equation {
    Sigmoid { y: VarId, x: VarId },
    Exp { y: VarId, x: VarId },
    Neg { y: VarId, x: VarId },
    Product { y: VarId, x1: VarId, x2: VarId },
    /// `y = Σ cᵢ·xᵢ + constant` with finite nonzero coefficients.
    AffineSum {
        y: VarId,
        terms: Vec<(f64, VarId)>,
        constant: f64,
    },
}

impl Equation {
    pub fn output(&self) -> VarId {
        match self {
            Equation::Sigmoid { y, .. }
            | Equation::Exp { y, .. }
            | Equation::Neg { y, .. }
            | Equation::Product { y, .. }
            | Equation::AffineSum { y, .. } => *y,
        }
    }

    /// Argument variables (without the output), in order.
    pub fn inputs(&self) -> Vec<VarId> {
        match self {
            Equation::Sigmoid { x, .. } | Equation::Exp { x, .. } | Equation::Neg { x, .. } => vec![*x],
            Equation::Product { x1, x2, .. } => vec![*x1, *x2],
            Equation::AffineSum { terms, .. } => terms.iter().map(|&(_, v)| v).collect(),
        }
    }

    /// Output followed by inputs.
    pub fn vars(&self) -> Vec<VarId> {
        let mut v = vec![self.output()];
        v.extend(self.inputs());
        v
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Equation::Sigmoid { .. } => "sigmoid",
            Equation::Exp { .. } => "exp",
            Equation::Neg { .. } => "neg",
            Equation::Product { .. } => "product",
            Equation::AffineSum { .. } => "affine_sum",
        }
    }

    /// Exact-arithmetic evaluation of the right-hand side at a point, in binary64.
    pub fn eval(&self, value: impl Fn(VarId) -> f64) -> f64 {
        match self {
            Equation::Sigmoid { x, .. } => 1.0 / (1.0 + (-value(*x)).exp()),
            Equation::Exp { x, .. } => value(*x).exp(),
            Equation::Neg { x, .. } => -value(*x),
            Equation::Product { x1, x2, .. } => value(*x1) * value(*x2),
            Equation::AffineSum { terms, constant, .. } => {
                terms.iter().fold(*constant, |acc, &(c, v)| c.mul_add(value(v), acc))
            }
        }
    }
}

/// Origin of a bound change recorded on the trail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cause {
    Equation(usize),
    Clause(usize),
    Decision,
}

impl fmt::Display for Cause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cause::Equation(i) => write!(f, "equation #{i}"),
            Cause::Clause(i) => write!(f, "clause #{i}"),
            Cause::Decision => write!(f, "decision"),
        }
    }
}

/// A strict contraction `new ⊂ old` of one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationDelta {
    pub var: VarId,
    pub old: Interval,
    pub new: Interval,
    pub cause: Cause,
}

/// Working copy of the few intervals an equation touches.
struct Scratch<'a> {
    bx: &'a IntervalBox,
    changed: Vec<(VarId, Interval)>,
}

impl<'a> Scratch<'a> {
    fn get(&self, v: VarId) -> Interval {
        self.changed
            .iter()
            .rev()
            .find(|(w, _)| *w == v)
            .map(|(_, iv)| *iv)
            .unwrap_or_else(|| self.bx.get(v))
    }

    /// Narrows `v` to `v ∩ with`; returns false once something became empty.
    fn narrow(&mut self, v: VarId, with: Interval) -> bool {
        let cur = self.get(v);
        let new = cur.intersect(&with);
        if new != cur {
            self.changed.push((v, new));
        }
        !new.is_empty()
    }

    fn into_deltas(self, cause: Cause) -> Vec<PropagationDelta> {
        let mut out: Vec<PropagationDelta> = Vec::new();
        for (v, new) in self.changed {
            match out.iter_mut().find(|d| d.var == v) {
                Some(d) => d.new = new,
                None => out.push(PropagationDelta {
                    var: v,
                    old: self.bx.get(v),
                    new,
                    cause,
                }),
            }
        }
        // an empty result always ends up last so callers see the conflict
        out.sort_by_key(|d| d.new.is_empty());
        out
    }
}

/// Forward then backward contraction of `eq` over `bx`.
///
/// Every returned delta satisfies `new ⊂ old`; an empty `new` signals a
/// conflict. All point solutions of the equation inside `bx` survive.
pub fn propagate(eq: &Equation, bx: &IntervalBox, cause: Cause) -> Vec<PropagationDelta> {
    let mut s = Scratch { bx, changed: Vec::new() };
    let _ = match eq {
        Equation::Sigmoid { y, x } => {
            let yy = fwd_prop_sigmoid(&s.get(*x), &s.get(*y));
            s.narrow(*y, yy) && {
                let xx = bwd_prop_sigmoid(&s.get(*x), &s.get(*y));
                s.narrow(*x, xx)
            }
        }
        Equation::Exp { y, x } => {
            let img = s.get(*x).exp();
            s.narrow(*y, img) && {
                let pre = s.get(*y).ln();
                s.narrow(*x, pre)
            }
        }
        Equation::Neg { y, x } => {
            let img = s.get(*x).neg();
            s.narrow(*y, img) && {
                let pre = s.get(*y).neg();
                s.narrow(*x, pre)
            }
        }
        Equation::Product { y, x1, x2 } if x1 == x2 => {
            let img = s.get(*x1).square();
            s.narrow(*y, img) && {
                let pre = s.get(*x1).square_preimage(&s.get(*y));
                s.narrow(*x1, pre)
            }
        }
        Equation::Product { y, x1, x2 } => {
            let img = s.get(*x1).mul(&s.get(*x2));
            s.narrow(*y, img) && {
                let q1 = s.get(*y).div(&s.get(*x2));
                s.narrow(*x1, q1)
            } && {
                let q2 = s.get(*y).div(&s.get(*x1));
                s.narrow(*x2, q2)
            }
        }
        Equation::AffineSum { y, terms, constant } => propagate_affine(&mut s, *y, terms, *constant),
    };
    s.into_deltas(cause)
}

fn propagate_affine(s: &mut Scratch<'_>, y: VarId, terms: &[(f64, VarId)], constant: f64) -> bool {
    let scaled: Vec<Interval> = terms.iter().map(|&(c, v)| s.get(v).scale(c)).collect();
    let image = scaled.iter().fold(Interval::point(constant), |acc, t| acc.add(t));
    if !s.narrow(y, image) {
        return false;
    }
    if terms.is_empty() {
        return true;
    }

    // Totals of the term bounds, keeping infinite contributions apart so each
    // variable's residual can be formed in O(1).
    let mut lo_sum = constant;
    let mut hi_sum = constant;
    let mut lo_inf = 0usize;
    let mut hi_inf = 0usize;
    for t in &scaled {
        if t.lo().is_finite() {
            lo_sum = rounding::add(lo_sum, t.lo(), Direction::Down);
        } else {
            lo_inf += 1;
        }
        if t.hi().is_finite() {
            hi_sum = rounding::add(hi_sum, t.hi(), Direction::Up);
        } else {
            hi_inf += 1;
        }
    }

    let yv = s.get(y);
    for (j, &(c, v)) in terms.iter().enumerate() {
        let t = scaled[j];
        let rest_lo = if lo_inf > usize::from(!t.lo().is_finite()) {
            f64::NEG_INFINITY
        } else if t.lo().is_finite() {
            rounding::sub(lo_sum, t.lo(), Direction::Down)
        } else {
            lo_sum
        };
        let rest_hi = if hi_inf > usize::from(!t.hi().is_finite()) {
            f64::INFINITY
        } else if t.hi().is_finite() {
            rounding::sub(hi_sum, t.hi(), Direction::Up)
        } else {
            hi_sum
        };
        // c·x = y - rest
        let rest = Interval::normalized(rest_lo, false, rest_hi, false);
        let cx = yv.sub(&rest);
        let xv = if c == 1.0 {
            cx
        } else if c == -1.0 {
            cx.neg()
        } else {
            cx.div(&Interval::point(c))
        };
        if !s.narrow(v, xv) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(ivs: &[Interval]) -> IntervalBox {
        IntervalBox::new(ivs.to_vec())
    }

    fn apply(b: &mut IntervalBox, deltas: &[PropagationDelta]) {
        for d in deltas {
            assert!(d.new.is_subset(&d.old) && d.new != d.old);
            b.set(d.var, d.new);
        }
    }

    #[test]
    fn exp_forward() {
        let mut b = bx(&[Interval::ENTIRE, Interval::point(0.0)]);
        let eq = Equation::Exp { y: VarId(0), x: VarId(1) };
        let d = propagate(&eq, &b, Cause::Equation(0));
        apply(&mut b, &d);
        assert_eq!(b.get(VarId(0)), Interval::point(1.0));
    }

    #[test]
    fn affine_forward_and_backward() {
        let mut b = bx(&[Interval::ENTIRE, Interval::closed(0.0, 1.0), Interval::closed(0.0, 1.0)]);
        let eq = Equation::AffineSum {
            y: VarId(0),
            terms: vec![(0.5, VarId(1)), (0.5, VarId(2))],
            constant: 0.0,
        };
        let d = propagate(&eq, &b, Cause::Equation(0));
        apply(&mut b, &d);
        assert_eq!(b.get(VarId(0)), Interval::closed(0.0, 1.0));

        // y in [0.9, 1] forces both inputs up
        b.set(VarId(0), Interval::closed(0.9, 1.0));
        let d = propagate(&eq, &b, Cause::Equation(0));
        apply(&mut b, &d);
        assert!(b.get(VarId(1)).lo() >= 0.8 - 1e-15);
        assert!(b.get(VarId(1)).contains(0.8) && b.get(VarId(2)).contains(1.0));
    }

    #[test]
    fn affine_backward_with_unbounded_terms() {
        // y = x1 + x2, y in [0, 1], x1 in [0, 1], x2 unbounded -> x2 in [-1, 1]
        let mut b = bx(&[Interval::closed(0.0, 1.0), Interval::closed(0.0, 1.0), Interval::ENTIRE]);
        let eq = Equation::AffineSum {
            y: VarId(0),
            terms: vec![(1.0, VarId(1)), (1.0, VarId(2))],
            constant: 0.0,
        };
        let d = propagate(&eq, &b, Cause::Equation(0));
        apply(&mut b, &d);
        assert_eq!(b.get(VarId(2)), Interval::closed(-1.0, 1.0));
    }

    #[test]
    fn product_backward_divides() {
        let mut b = bx(&[Interval::point(1.0), Interval::closed(1.0, 2.0), Interval::ENTIRE]);
        let eq = Equation::Product { y: VarId(0), x1: VarId(1), x2: VarId(2) };
        let d = propagate(&eq, &b, Cause::Equation(0));
        apply(&mut b, &d);
        assert_eq!(b.get(VarId(2)), Interval::closed(0.5, 1.0));
    }

    #[test]
    fn square_is_nonnegative_and_inverts_to_both_branches() {
        let eq = Equation::Product { y: VarId(0), x1: VarId(1), x2: VarId(1) };
        let mut b = bx(&[Interval::ENTIRE, Interval::closed(-1.0, 2.0)]);
        let d = propagate(&eq, &b, Cause::Equation(0));
        apply(&mut b, &d);
        assert_eq!(b.get(VarId(0)), Interval::closed(0.0, 4.0));

        let mut b = bx(&[Interval::closed(1.0, 4.0), Interval::closed(-3.0, 1.5)]);
        let d = propagate(&eq, &b, Cause::Equation(0));
        apply(&mut b, &d);
        assert_eq!(b.get(VarId(1)), Interval::closed(-2.0, 1.5));

        let b = bx(&[Interval::at_most(-0.5, false), Interval::closed(-1.0, 1.0)]);
        let d = propagate(&eq, &b, Cause::Equation(0));
        assert!(d.last().unwrap().new.is_empty());
    }

    #[test]
    fn neg_reflects() {
        let mut b = bx(&[Interval::ENTIRE, Interval::new(1.0, true, 2.0, false).unwrap()]);
        let eq = Equation::Neg { y: VarId(0), x: VarId(1) };
        let d = propagate(&eq, &b, Cause::Equation(0));
        apply(&mut b, &d);
        assert_eq!(b.get(VarId(0)), Interval::new(-2.0, false, -1.0, true).unwrap());
    }

    #[test]
    fn conflict_is_reported_as_empty_delta() {
        let b = bx(&[Interval::at_most(0.0, false), Interval::ENTIRE]);
        let eq = Equation::Sigmoid { y: VarId(0), x: VarId(1) };
        let d = propagate(&eq, &b, Cause::Equation(3));
        assert!(d.last().unwrap().new.is_empty());
        assert_eq!(d.last().unwrap().cause, Cause::Equation(3));
    }
}
