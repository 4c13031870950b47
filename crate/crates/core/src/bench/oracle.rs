use std::collections::VecDeque;

use crate::formula::{ConstraintSystem, Literal, Relation};
use crate::interval::{Interval, VarId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("{0} free variables; the grid oracle handles at most 4")]
    TooManyFree(usize),
    #[error("free variable `{0}` is unbounded")]
    Unbounded(String),
    #[error("equations are not feedforward at `{0}`")]
    NotFeedforward(String),
}

pub const MAX_FREE: usize = 4;

/// Relative margin by which clause literals must hold at an oracle point.
const MARGIN: f64 = 1e-9;

fn holds_robustly(lit: &Literal, value: f64) -> bool {
    let a = lit.effective();
    let m = MARGIN * a.constant.abs().max(1.0);
    match a.rel {
        Relation::Lt | Relation::Le => value <= a.constant - m,
        Relation::Gt | Relation::Ge => value >= a.constant + m,
    }
}

/// Searches a regular grid over the free variables for a point satisfying
/// the whole system.
///
/// Free variables are those no equation defines. Their domain is the initial
/// interval narrowed by unit clauses on them; a point domain contributes a
/// single value, otherwise `grid` cell midpoints are tried. Dependent
/// variables are evaluated through the equations and must lie in their
/// initial intervals, and every other clause must hold with a small margin.
/// A returned point is therefore a solution up to floating-point evaluation
/// of the equations.
pub fn brute_force_oracle(system: &ConstraintSystem, grid: usize) -> Result<Option<Vec<f64>>, OracleError> {
    let n = system.num_vars();
    let mut def: Vec<Option<usize>> = vec![None; n];
    for (i, eq) in system.equations.iter().enumerate() {
        let y = eq.output();
        if def[y.0].replace(i).is_some() {
            return Err(OracleError::NotFeedforward(system.name(y).to_string()));
        }
    }

    // equations in dependency order
    let mut indegree = vec![0usize; system.equations.len()];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, eq) in system.equations.iter().enumerate() {
        for x in eq.inputs() {
            if def[x.0].is_some() {
                indegree[i] += 1;
                users[x.0].push(i);
            }
        }
    }
    let mut ready: VecDeque<usize> = (0..indegree.len()).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(indegree.len());
    while let Some(i) = ready.pop_front() {
        order.push(i);
        for &j in &users[system.equations[i].output().0] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push_back(j);
            }
        }
    }
    if order.len() != system.equations.len() {
        let stuck = (0..indegree.len()).find(|&i| indegree[i] > 0).expect("cycle member");
        return Err(OracleError::NotFeedforward(system.name(system.equations[stuck].output()).to_string()));
    }

    let free: Vec<VarId> = (0..n).filter(|&v| def[v].is_none()).map(VarId).collect();
    let is_free = |v: VarId| def[v.0].is_none();
    let mut domain: Vec<Interval> = system.variables().iter().map(|v| v.init).collect();
    let mut checked_clauses = Vec::new();
    for c in &system.clauses {
        match c.literals.as_slice() {
            [l] if is_free(l.atom.var) => {
                let v = l.atom.var;
                domain[v.0] = domain[v.0].intersect(&l.effective().as_interval());
            }
            _ => checked_clauses.push(c),
        }
    }

    let mut axes: Vec<(VarId, Vec<f64>)> = Vec::new();
    let mut gridded = 0;
    for &v in &free {
        let d = domain[v.0];
        if d.is_empty() {
            return Ok(None);
        }
        if d.is_point() {
            axes.push((v, vec![d.lo()]));
            continue;
        }
        if !d.is_bounded() {
            return Err(OracleError::Unbounded(system.name(v).to_string()));
        }
        gridded += 1;
        let g = grid.max(1);
        let w = (d.hi() - d.lo()) / g as f64;
        let pts = (0..g).map(|i| d.lo() + (i as f64 + 0.5) * w).filter(|p| d.contains(*p)).collect();
        axes.push((v, pts));
    }
    if gridded > MAX_FREE {
        return Err(OracleError::TooManyFree(gridded));
    }
    if axes.iter().any(|(_, pts)| pts.is_empty()) {
        return Ok(None);
    }

    let mut values = vec![0.0; n];
    let mut idx = vec![0usize; axes.len()];
    'points: loop {
        for (k, (v, pts)) in axes.iter().enumerate() {
            values[v.0] = pts[idx[k]];
        }
        let mut ok = true;
        for &i in &order {
            let eq = &system.equations[i];
            let y = eq.eval(|v| values[v.0]);
            values[eq.output().0] = y;
            if y.is_nan() || !system.var(eq.output()).init.contains(y) {
                ok = false;
                break;
            }
        }
        if ok
            && checked_clauses
                .iter()
                .all(|c| c.literals.iter().any(|l| holds_robustly(l, values[l.atom.var.0])))
        {
            return Ok(Some(values));
        }
        // odometer step
        for k in 0..axes.len() {
            idx[k] += 1;
            if idx[k] < axes[k].1.len() {
                continue 'points;
            }
            idx[k] = 0;
        }
        return Ok(None);
    }
}
