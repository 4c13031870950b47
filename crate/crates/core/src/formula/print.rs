use std::fmt::Write;

use crate::icp::Equation;
use crate::interval::fmt_bound;

use super::{ConstraintSystem, Literal};

/// Renders a system in the constraint language; the output reparses to the same IR.
pub(super) fn print_system(s: &ConstraintSystem) -> String {
    let mut out = String::new();
    if !s.metadata.origin.is_empty() {
        let _ = writeln!(out, "# origin: {}", s.metadata.origin);
    }
    if let Some(enc) = &s.metadata.encoding {
        let _ = writeln!(out, "# encoding: {enc}");
    }
    for v in s.variables() {
        let _ = writeln!(out, "var {} in {};", v.name, v.init);
    }
    for eq in &s.equations {
        let n = |v| s.name(v);
        let _ = match eq {
            Equation::Sigmoid { y, x } => writeln!(out, "{} = sigmoid({});", n(*y), n(*x)),
            Equation::Exp { y, x } => writeln!(out, "{} = exp({});", n(*y), n(*x)),
            Equation::Neg { y, x } => writeln!(out, "{} = -{};", n(*y), n(*x)),
            Equation::Product { y, x1, x2 } => writeln!(out, "{} = {} * {};", n(*y), n(*x1), n(*x2)),
            Equation::AffineSum { y, terms, constant } => {
                let mut line = format!("{} = ", n(*y));
                for (c, v) in terms {
                    let _ = write!(line, "{}*{} + ", fmt_bound(*c), n(*v));
                }
                let _ = write!(line, "{};", fmt_bound(*constant));
                writeln!(out, "{line}")
            }
        };
    }
    for c in &s.clauses {
        let lit = |l: &Literal| {
            let a = format!("{} {} {}", s.name(l.atom.var), l.atom.rel.symbol(), fmt_bound(l.atom.constant));
            if l.positive {
                a
            } else {
                format!("not({a})")
            }
        };
        match c.literals.as_slice() {
            [l] if l.positive => {
                let _ = writeln!(out, "{};", lit(l));
            }
            lits => {
                let body: Vec<String> = lits.iter().map(lit).collect();
                let _ = writeln!(out, "clause {};", body.join(" or "));
            }
        }
    }
    out
}
