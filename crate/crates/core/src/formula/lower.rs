//! Lowering of arithmetic expressions into three-address equations.

use std::collections::HashMap;
use std::fmt;

use crate::icp::Equation;
use crate::interval::{Interval, VarId};
use crate::nn::sigmoid_box_clauses;

use super::ConstraintSystem;

/// How `sigmoid(·)` is represented in the constraint system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EncodingMode {
    /// One `Sigmoid` equation handled by the dedicated contractor.
    Dedicated,
    /// `1 = z · (1 + exp(-x))` through neg, exp, sum and product equations.
    Compositional,
    /// Piecewise interval boxes of width `width` on `[lo, hi)` plus two
    /// unbounded tails, as implication clauses.
    Approximating { width: f64, lo: f64, hi: f64 },
}

impl EncodingMode {
    pub const DEFAULT_APPROX: EncodingMode = EncodingMode::Approximating {
        width: 0.5,
        lo: -8.0,
        hi: 8.0,
    };

    /// Mode from its command-line name; the grid applies to `approx` only.
    pub fn from_name(name: &str, width: f64, lo: f64, hi: f64) -> Result<EncodingMode, String> {
        match name {
            "dedicated" => Ok(EncodingMode::Dedicated),
            "compositional" => Ok(EncodingMode::Compositional),
            "approx" | "approximating" => Ok(EncodingMode::Approximating { width, lo, hi }),
            _ => Err(format!("unknown encoding `{name}` (expected dedicated, compositional or approx)")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EncodingMode::Dedicated => "dedicated",
            EncodingMode::Compositional => "compositional",
            EncodingMode::Approximating { .. } => "approx",
        }
    }
}

impl fmt::Display for EncodingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Expression tree over the operators of the constraint language.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(VarId),
    Neg(Box<Expr>),
    /// n-ary sum; kept flat so long sums never build deep trees.
    Sum(Vec<Expr>),
    Mul(Vec<Expr>),
    Exp(Box<Expr>),
    Sigmoid(Box<Expr>),
    /// A function the language does not support; rejected by lowering.
    Call(String, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LowerError {
    #[error("unsupported operator `{0}`")]
    Unsupported(String),
    #[error("non-finite constant {0}")]
    NonFinite(f64),
    #[error("invalid approximation grid: {0}")]
    Grid(String),
}

/// `Σ cᵢ·xᵢ + constant` with merged duplicate variables, in first-occurrence order.
#[derive(Debug, Clone, Default)]
struct Linear {
    terms: Vec<(f64, VarId)>,
    constant: f64,
    index: HashMap<VarId, usize>,
}

impl Linear {
    fn constant(c: f64) -> Self {
        Linear {
            constant: c,
            ..Linear::default()
        }
    }

    fn var(v: VarId) -> Self {
        Linear {
            terms: vec![(1.0, v)],
            constant: 0.0,
            index: HashMap::from([(v, 0)]),
        }
    }

    fn add(&mut self, other: Linear) {
        for (c, v) in other.terms {
            match self.index.get(&v) {
                Some(&k) => self.terms[k].0 += c,
                None => {
                    self.index.insert(v, self.terms.len());
                    self.terms.push((c, v));
                }
            }
        }
        self.constant += other.constant;
    }

    fn scale(mut self, k: f64) -> Self {
        for t in &mut self.terms {
            t.0 *= k;
        }
        self.constant *= k;
        self
    }

    fn cleaned(mut self) -> Self {
        self.terms.retain(|&(c, _)| c != 0.0);
        self.index = self.terms.iter().enumerate().map(|(k, &(_, v))| (v, k)).collect();
        self
    }

    fn as_single_var(&self) -> Option<VarId> {
        match self.terms.as_slice() {
            [(c, v)] if *c == 1.0 && self.constant == 0.0 => Some(*v),
            _ => None,
        }
    }
}

/// Emits equations into a system, introducing auxiliaries as needed.
pub struct Lowerer<'a> {
    system: &'a mut ConstraintSystem,
    mode: EncodingMode,
}

impl<'a> Lowerer<'a> {
    pub fn new(system: &'a mut ConstraintSystem, mode: EncodingMode) -> Self {
        Lowerer { system, mode }
    }

    fn aux(&mut self, init: Interval) -> VarId {
        let name = format!("_a{}", self.system.num_vars());
        self.system.fresh(&name, init)
    }

    /// Point-interval variable holding `c`, shared between uses.
    pub fn constant(&mut self, c: f64) -> Result<VarId, LowerError> {
        if !c.is_finite() {
            return Err(LowerError::NonFinite(c));
        }
        let name = constant_name(c);
        if let Some(v) = self.system.lookup(&name) {
            if self.system.var(v).init == Interval::point(c) {
                return Ok(v);
            }
        }
        Ok(self.system.fresh(&name, Interval::point(c)))
    }

    fn linearize(&mut self, e: &Expr) -> Result<Linear, LowerError> {
        Ok(match e {
            Expr::Const(c) => {
                if !c.is_finite() {
                    return Err(LowerError::NonFinite(*c));
                }
                Linear::constant(*c)
            }
            Expr::Var(v) => Linear::var(*v),
            Expr::Neg(inner) => self.linearize(inner)?.scale(-1.0),
            Expr::Sum(items) => {
                let mut acc = Linear::default();
                for it in items {
                    let l = self.linearize(it)?;
                    acc.add(l);
                }
                acc
            }
            Expr::Mul(factors) => {
                let mut coeff = 1.0;
                let mut nonconst: Vec<Linear> = Vec::new();
                for f in factors {
                    let l = self.linearize(f)?.cleaned();
                    if l.terms.is_empty() {
                        coeff *= l.constant;
                    } else {
                        nonconst.push(l);
                    }
                }
                match nonconst.len() {
                    0 => Linear::constant(coeff),
                    1 => nonconst.pop().unwrap().scale(coeff),
                    _ => {
                        let mut it = nonconst.into_iter();
                        let mut acc = self.materialize(it.next().unwrap())?;
                        for l in it {
                            let rhs = self.materialize(l)?;
                            let p = self.aux(Interval::ENTIRE);
                            self.system.add_equation(Equation::Product { y: p, x1: acc, x2: rhs });
                            acc = p;
                        }
                        Linear::var(acc).scale(coeff)
                    }
                }
            }
            Expr::Exp(arg) => {
                let x = self.lower(arg)?;
                let y = self.aux(Interval::at_least(0.0, true));
                self.system.add_equation(Equation::Exp { y, x });
                Linear::var(y)
            }
            Expr::Sigmoid(arg) => {
                let x = self.lower(arg)?;
                let init = match self.mode {
                    EncodingMode::Approximating { .. } => Interval::closed(0.0, 1.0),
                    _ => Interval::open(0.0, 1.0),
                };
                let z = self.aux(init);
                self.sigmoid_into(z, x)?;
                Linear::var(z)
            }
            Expr::Call(name, _) => return Err(LowerError::Unsupported(name.clone())),
        })
    }

    fn materialize(&mut self, l: Linear) -> Result<VarId, LowerError> {
        let l = l.cleaned();
        if let Some(v) = l.as_single_var() {
            return Ok(v);
        }
        if l.terms.is_empty() {
            return self.constant(l.constant);
        }
        let y = self.aux(Interval::ENTIRE);
        self.system.add_equation(Equation::AffineSum {
            y,
            terms: l.terms,
            constant: l.constant,
        });
        Ok(y)
    }

    /// Lowers `e` and returns the variable holding its value.
    pub fn lower(&mut self, e: &Expr) -> Result<VarId, LowerError> {
        let l = self.linearize(e)?;
        self.materialize(l)
    }

    /// Emits the relation `z = sig(x)` under the current mode.
    pub fn sigmoid_into(&mut self, z: VarId, x: VarId) -> Result<(), LowerError> {
        match self.mode {
            EncodingMode::Dedicated => self.system.add_equation(Equation::Sigmoid { y: z, x }),
            EncodingMode::Compositional => {
                // 1 = z · (1 + exp(-x))
                let w = self.aux(Interval::ENTIRE);
                self.system.add_equation(Equation::Neg { y: w, x });
                let u = self.aux(Interval::at_least(0.0, true));
                self.system.add_equation(Equation::Exp { y: u, x: w });
                let t = self.aux(Interval::ENTIRE);
                self.system.add_equation(Equation::AffineSum {
                    y: t,
                    terms: vec![(1.0, u)],
                    constant: 1.0,
                });
                let one = self.constant(1.0)?;
                self.system.add_equation(Equation::Product { y: one, x1: z, x2: t });
            }
            EncodingMode::Approximating { width, lo, hi } => {
                let clauses = sigmoid_box_clauses(width, lo, hi, x, z).map_err(|e| LowerError::Grid(e.to_string()))?;
                self.system.restrict(z, Interval::closed(0.0, 1.0));
                for c in clauses {
                    self.system.add_clause(c);
                }
            }
        }
        Ok(())
    }

    /// Emits `y = e` with `y` as the defining output wherever the top-level
    /// operator allows it. Returns false when `e` is a pure constant and no
    /// equation was emitted (the caller pins `y` instead).
    pub fn define(&mut self, y: VarId, e: &Expr) -> Result<bool, LowerError> {
        match e {
            Expr::Sigmoid(arg) => {
                let x = self.lower(arg)?;
                self.sigmoid_into(y, x)?;
            }
            Expr::Exp(arg) => {
                let x = self.lower(arg)?;
                self.system.add_equation(Equation::Exp { y, x });
            }
            Expr::Neg(inner) if matches!(**inner, Expr::Var(_)) => {
                let Expr::Var(x) = **inner else { unreachable!() };
                self.system.add_equation(Equation::Neg { y, x });
            }
            Expr::Mul(factors) if factors.len() == 2 && factors.iter().all(|f| matches!(f, Expr::Var(_))) => {
                let (Expr::Var(x1), Expr::Var(x2)) = (&factors[0], &factors[1]) else { unreachable!() };
                self.system.add_equation(Equation::Product { y, x1: *x1, x2: *x2 });
            }
            _ => {
                let l = self.linearize(e)?.cleaned();
                if l.terms.is_empty() {
                    return Ok(false);
                }
                self.system.add_equation(Equation::AffineSum {
                    y,
                    terms: l.terms,
                    constant: l.constant,
                });
            }
        }
        Ok(true)
    }
}

/// Lowers `expr` into `system` and returns the variable carrying its value.
pub fn lower_expression(system: &mut ConstraintSystem, expr: &Expr, mode: EncodingMode) -> Result<VarId, LowerError> {
    Lowerer::new(system, mode).lower(expr)
}

fn constant_name(c: f64) -> String {
    let repr = format!("{c:?}");
    let body: String = repr
        .chars()
        .map(|ch| match ch {
            '-' => 'm',
            '.' => 'p',
            '+' => 'P',
            other => other,
        })
        .collect();
    format!("_c{body}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys_with(names: &[&str]) -> (ConstraintSystem, Vec<VarId>) {
        let mut s = ConstraintSystem::new();
        let ids = names.iter().map(|n| s.declare(n, Interval::ENTIRE).unwrap()).collect();
        (s, ids)
    }

    #[test]
    fn compositional_sigmoid_chain() {
        let (mut s, ids) = sys_with(&["x"]);
        let root = lower_expression(&mut s, &Expr::Sigmoid(Box::new(Expr::Var(ids[0]))), EncodingMode::Compositional).unwrap();
        assert_eq!(s.equations.len(), 4);
        let kinds: Vec<_> = s.equations.iter().map(|e| e.kind_name()).collect();
        assert_eq!(kinds, ["neg", "exp", "affine_sum", "product"]);
        let one = s.lookup("_c1p0").unwrap();
        assert_eq!(s.var(one).init, Interval::point(1.0));
        assert_eq!(s.equations[3], Equation::Product { y: one, x1: root, x2: s.equations[2].output() });
        assert_eq!(s.var(root).init, Interval::open(0.0, 1.0));
    }

    #[test]
    fn dedicated_sigmoid_is_one_equation() {
        let (mut s, ids) = sys_with(&["x"]);
        lower_expression(&mut s, &Expr::Sigmoid(Box::new(Expr::Var(ids[0]))), EncodingMode::Dedicated).unwrap();
        assert_eq!(s.equations.len(), 1);
    }

    #[test]
    fn linear_combination_needs_no_auxiliaries() {
        let (mut s, v) = sys_with(&["x1", "x2", "x3"]);
        let e = Expr::Sum(vec![
            Expr::Mul(vec![Expr::Const(2.0), Expr::Var(v[0])]),
            Expr::Mul(vec![Expr::Const(-1.0), Expr::Var(v[1])]),
            Expr::Mul(vec![Expr::Const(0.5), Expr::Var(v[2])]),
            Expr::Const(3.0),
        ]);
        let root = lower_expression(&mut s, &e, EncodingMode::Dedicated).unwrap();
        assert_eq!(s.num_vars(), 4);
        assert_eq!(
            s.equations,
            vec![Equation::AffineSum {
                y: root,
                terms: vec![(2.0, v[0]), (-1.0, v[1]), (0.5, v[2])],
                constant: 3.0
            }]
        );
    }

    #[test]
    fn unsupported_call_is_rejected() {
        let (mut s, v) = sys_with(&["x"]);
        let e = Expr::Call("tanh".into(), vec![Expr::Var(v[0])]);
        assert_eq!(lower_expression(&mut s, &e, EncodingMode::Dedicated), Err(LowerError::Unsupported("tanh".into())));
    }

    #[test]
    fn lowering_preserves_values_bottom_up() {
        // y = exp(2*x + 1) * sigmoid(-x) + 0.25
        let (mut s, v) = sys_with(&["x"]);
        let x = v[0];
        let e = Expr::Sum(vec![
            Expr::Mul(vec![
                Expr::Exp(Box::new(Expr::Sum(vec![Expr::Mul(vec![Expr::Const(2.0), Expr::Var(x)]), Expr::Const(1.0)]))),
                Expr::Sigmoid(Box::new(Expr::Neg(Box::new(Expr::Var(x))))),
            ]),
            Expr::Const(0.25),
        ]);
        let root = lower_expression(&mut s, &e, EncodingMode::Dedicated).unwrap();
        for &xv in &[-1.5, 0.0, 0.3, 2.0] {
            let mut vals = vec![f64::NAN; s.num_vars()];
            vals[x.0] = xv;
            for eq in &s.equations {
                let r = eq.eval(|w| vals[w.0]);
                vals[eq.output().0] = r;
            }
            let expected = (2.0 * xv + 1.0).exp() * (1.0 / (1.0 + xv.exp())) + 0.25;
            assert!((vals[root.0] - expected).abs() <= 1e-12 * expected.abs());
        }
    }
}
