//! Constraint systems: variables with initial intervals, definitional
//! equations and clauses over bound atoms. Includes the textual constraint
//! language, expression lowering and sum restructuring.

mod balance;
mod lower;
mod parser;
mod print;

pub use balance::{balance_affine_sums, restructure_affine_sums, sum_tree_depth, SumShape};
pub use lower::{lower_expression, EncodingMode, Expr, Lowerer};
pub use lower::LowerError;
pub use parser::{parse_system, parse_system_with, ParseError, ParseErrorKind};

use std::collections::HashMap;
use std::fmt;

use crate::icp::Equation;
use crate::interval::{Interval, IntervalBox, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Relation {
    pub fn negate(self) -> Relation {
        match self {
            Relation::Lt => Relation::Ge,
            Relation::Le => Relation::Gt,
            Relation::Gt => Relation::Le,
            Relation::Ge => Relation::Lt,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Gt => ">",
            Relation::Ge => ">=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Relation::Lt => lhs < rhs,
            Relation::Le => lhs <= rhs,
            Relation::Gt => lhs > rhs,
            Relation::Ge => lhs >= rhs,
        }
    }
}

/// `var rel constant`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundAtom {
    pub var: VarId,
    pub rel: Relation,
    pub constant: f64,
}

impl BoundAtom {
    pub fn new(var: VarId, rel: Relation, constant: f64) -> Self {
        BoundAtom { var, rel, constant }
    }

    /// The set of values satisfying the atom.
    pub fn as_interval(&self) -> Interval {
        match self.rel {
            Relation::Lt => Interval::at_most(self.constant, true),
            Relation::Le => Interval::at_most(self.constant, false),
            Relation::Gt => Interval::at_least(self.constant, true),
            Relation::Ge => Interval::at_least(self.constant, false),
        }
    }

    pub fn negate(&self) -> BoundAtom {
        BoundAtom {
            rel: self.rel.negate(),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Literal {
    pub atom: BoundAtom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: BoundAtom) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: BoundAtom) -> Self {
        Literal { atom, positive: false }
    }

    /// The bound atom equivalent to this literal.
    pub fn effective(&self) -> BoundAtom {
        if self.positive {
            self.atom
        } else {
            self.atom.negate()
        }
    }

    pub fn holds_at(&self, value: f64) -> bool {
        let a = self.effective();
        a.rel.holds(value, a.constant)
    }
}

/// A nonempty disjunction of literals.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub literals: Vec<Literal>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Self {
        assert!(!literals.is_empty(), "clauses are nonempty");
        Clause { literals }
    }

    pub fn unit(atom: BoundAtom) -> Self {
        Clause::new(vec![Literal::pos(atom)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub init: Interval,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    pub origin: String,
    pub encoding: Option<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SystemError {
    #[error("variable `{0}` declared twice")]
    Duplicate(String),
    #[error("unknown variable `{0}`")]
    Undeclared(String),
    #[error("variable id {0} out of range")]
    BadId(usize),
    #[error("affine sum defining `{0}` has no terms")]
    EmptySum(String),
    #[error("affine sum defining `{0}` has a zero or non-finite coefficient")]
    BadCoefficient(String),
    #[error("non-finite constant in {0}")]
    BadConstant(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSystem {
    variables: Vec<Variable>,
    names: HashMap<String, VarId>,
    pub equations: Vec<Equation>,
    pub clauses: Vec<Clause>,
    pub metadata: Metadata,
}

impl ConstraintSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: &str, init: Interval) -> Result<VarId, SystemError> {
        if self.names.contains_key(name) {
            return Err(SystemError::Duplicate(name.to_string()));
        }
        let id = VarId(self.variables.len());
        self.variables.push(Variable {
            name: name.to_string(),
            init,
        });
        self.names.insert(name.to_string(), id);
        Ok(id)
    }

    /// Declares a variable under `base`, or `base_N` when that name is taken.
    pub fn fresh(&mut self, base: &str, init: Interval) -> VarId {
        if !self.names.contains_key(base) {
            return self.declare(base, init).expect("name checked");
        }
        let mut n = self.variables.len();
        loop {
            let name = format!("{base}_{n}");
            if !self.names.contains_key(&name) {
                return self.declare(&name, init).expect("name checked");
            }
            n += 1;
        }
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.variables[id.0].name
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn set_init(&mut self, id: VarId, init: Interval) {
        self.variables[id.0].init = init;
    }

    /// Narrows the initial interval of `id`.
    pub fn restrict(&mut self, id: VarId, with: Interval) {
        let v = &mut self.variables[id.0];
        v.init = v.init.intersect(&with);
    }

    pub fn add_equation(&mut self, eq: Equation) {
        self.equations.push(eq);
    }

    pub fn add_clause(&mut self, clause: Clause) {
        self.clauses.push(clause);
    }

    pub fn assert_atom(&mut self, atom: BoundAtom) {
        self.clauses.push(Clause::unit(atom));
    }

    pub fn initial_box(&self) -> IntervalBox {
        IntervalBox::new(self.variables.iter().map(|v| v.init).collect())
    }

    /// Checks the structural invariants every consumer relies on.
    pub fn validate(&self) -> Result<(), SystemError> {
        let n = self.variables.len();
        let check = |v: VarId| if v.0 < n { Ok(()) } else { Err(SystemError::BadId(v.0)) };
        for eq in &self.equations {
            for v in eq.vars() {
                check(v)?;
            }
            if let Equation::AffineSum { y, terms, constant } = eq {
                if terms.is_empty() {
                    return Err(SystemError::EmptySum(self.name(*y).to_string()));
                }
                if terms.iter().any(|&(c, _)| c == 0.0 || !c.is_finite()) {
                    return Err(SystemError::BadCoefficient(self.name(*y).to_string()));
                }
                if !constant.is_finite() {
                    return Err(SystemError::BadConstant(format!("sum defining `{}`", self.name(*y))));
                }
            }
        }
        for c in &self.clauses {
            for l in &c.literals {
                check(l.atom.var)?;
                if l.atom.constant.is_nan() {
                    return Err(SystemError::BadConstant(format!("atom on `{}`", self.name(l.atom.var))));
                }
            }
        }
        Ok(())
    }

    /// Equation index defining each variable (the last one wins if several do).
    pub fn definitions(&self) -> Vec<Option<usize>> {
        let mut defs = vec![None; self.variables.len()];
        for (i, eq) in self.equations.iter().enumerate() {
            defs[eq.output().0] = Some(i);
        }
        defs
    }
}

impl fmt::Display for ConstraintSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::print_system(self))
    }
}
