//! Restructuring of n-ary affine sums into trees of binary partial sums.

use crate::icp::Equation;
use crate::interval::{Interval, VarId};

use super::ConstraintSystem;

const PARTIAL_PREFIX: &str = "_ps";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumShape {
    /// Balanced binary tree of depth `⌈log₂ k⌉`.
    Balanced,
    /// Left-leaning chain `((t₀ + t₁) + t₂) + …` of depth `k − 1`.
    Chain,
}

/// A summand: a scaled original variable or an unscaled partial sum.
type Term = (f64, VarId);

struct Builder<'a> {
    system: &'a mut ConstraintSystem,
    out: Vec<Equation>,
}

impl Builder<'_> {
    fn partial(&mut self, left: Term, right: Term) -> Term {
        let name = format!("{PARTIAL_PREFIX}{}", self.system.num_vars());
        let v = self.system.fresh(&name, Interval::ENTIRE);
        self.out.push(Equation::AffineSum {
            y: v,
            terms: vec![left, right],
            constant: 0.0,
        });
        (1.0, v)
    }

    /// Reduces `terms` to at most two summands, emitting partial sums
    /// children-first.
    fn top_pair(&mut self, terms: &[Term], shape: SumShape) -> Vec<Term> {
        match shape {
            SumShape::Balanced => {
                let mid = terms.len().div_ceil(2);
                let (l, r) = terms.split_at(mid);
                vec![self.subtree(l), self.subtree(r)]
            }
            SumShape::Chain => {
                let (last, rest) = terms.split_last().expect("at least two terms");
                let mut acc = rest[0];
                for t in &rest[1..] {
                    acc = self.partial(acc, *t);
                }
                vec![acc, *last]
            }
        }
    }

    fn subtree(&mut self, terms: &[Term]) -> Term {
        if terms.len() == 1 {
            return terms[0];
        }
        let pair = self.top_pair(terms, SumShape::Balanced);
        self.partial(pair[0], pair[1])
    }
}

/// Rewrites every affine sum with more than two terms into binary partial
/// sums of the given shape. The original output variable keeps its defining
/// equation (now binary) and retains the constant.
pub fn restructure_affine_sums(system: &ConstraintSystem, shape: SumShape) -> ConstraintSystem {
    let mut result = system.clone();
    let equations = std::mem::take(&mut result.equations);
    let mut b = Builder {
        system: &mut result,
        out: Vec::with_capacity(equations.len()),
    };
    for eq in equations {
        match eq {
            Equation::AffineSum { y, terms, constant } if terms.len() > 2 => {
                let pair = b.top_pair(&terms, shape);
                b.out.push(Equation::AffineSum { y, terms: pair, constant });
            }
            other => b.out.push(other),
        }
    }
    let out = b.out;
    result.equations = out;
    result
}

/// Balanced restructuring of all affine sums.
pub fn balance_affine_sums(system: &ConstraintSystem) -> ConstraintSystem {
    restructure_affine_sums(system, SumShape::Balanced)
}

/// Depth of the summation tree rooted at equation `eq_idx`, following
/// partial-sum auxiliaries. A plain n-ary sum has depth 1, other equations 0.
pub fn sum_tree_depth(system: &ConstraintSystem, eq_idx: usize) -> usize {
    let defs = system.definitions();
    let is_partial = |v: VarId| system.name(v).starts_with(PARTIAL_PREFIX);
    let mut depth: Vec<Option<usize>> = vec![None; system.equations.len()];
    let mut stack = vec![eq_idx];
    while let Some(&i) = stack.last() {
        let Equation::AffineSum { terms, .. } = &system.equations[i] else {
            depth[i] = Some(0);
            stack.pop();
            continue;
        };
        let mut best = 0;
        let mut pending = false;
        for &(_, v) in terms {
            if let (true, Some(j)) = (is_partial(v), defs[v.0]) {
                match depth[j] {
                    Some(d) => best = best.max(d),
                    None => {
                        pending = true;
                        stack.push(j);
                    }
                }
            }
        }
        if !pending {
            depth[i] = Some(best + 1);
            stack.pop();
        }
    }
    depth[eq_idx].unwrap_or(0)
}
