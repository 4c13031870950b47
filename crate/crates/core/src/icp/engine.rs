use std::collections::VecDeque;
use std::time::Instant;

use crate::formula::ConstraintSystem;
use crate::interval::{Interval, IntervalBox, VarId};
use crate::solver::{evaluate_clause, ClauseStatus};

use super::{propagate, Cause, PropagationDelta};

/// Minimum shrinkage for a contraction to wake up dependent equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    /// Absolute width reduction that always counts.
    pub abs: f64,
    /// Fraction of the old width that counts.
    pub rel: f64,
    /// Relative reductions below this absolute amount are ignored.
    pub min_abs: f64,
}

impl Default for Progress {
    fn default() -> Self {
        Progress {
            abs: 1e-3,
            rel: 0.01,
            min_abs: 1e-12,
        }
    }
}

impl Progress {
    pub fn significant(&self, old: &Interval, new: &Interval) -> bool {
        if new.is_empty() {
            return true;
        }
        if (!old.lo().is_finite() && new.lo().is_finite()) || (!old.hi().is_finite() && new.hi().is_finite()) {
            return true;
        }
        let (Ok(w0), Ok(w1)) = (old.width(), new.width()) else {
            return true;
        };
        if !w0.is_finite() {
            return false;
        }
        let shrink = w0 - w1;
        shrink >= self.abs || (shrink >= self.rel * w0 && shrink >= self.min_abs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeduceOutcome {
    Fixpoint,
    Conflict(Cause),
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Item {
    Equation(usize),
    Clause(usize),
}

/// Worklist-driven fixpoint engine for one constraint system.
#[derive(Debug, Clone)]
pub struct Deducer {
    eq_watch: Vec<Vec<usize>>,
    clause_watch: Vec<Vec<usize>>,
    queue: VecDeque<Item>,
    eq_queued: Vec<bool>,
    clause_queued: Vec<bool>,
    progress: Progress,
    deadline: Option<Instant>,
    propagations: u64,
}

/// Deadline is polled once per this many propagations.
pub const DEADLINE_POLL: u64 = 1024;

impl Deducer {
    pub fn new(system: &ConstraintSystem, progress: Progress) -> Self {
        let n = system.num_vars();
        let mut eq_watch = vec![Vec::new(); n];
        for (i, eq) in system.equations.iter().enumerate() {
            let mut vars = eq.vars();
            vars.sort();
            vars.dedup();
            for v in vars {
                eq_watch[v.0].push(i);
            }
        }
        let mut clause_watch = vec![Vec::new(); n];
        for (i, c) in system.clauses.iter().enumerate() {
            let mut vars: Vec<VarId> = c.literals.iter().map(|l| l.atom.var).collect();
            vars.sort();
            vars.dedup();
            for v in vars {
                clause_watch[v.0].push(i);
            }
        }
        Deducer {
            eq_watch,
            clause_watch,
            queue: VecDeque::new(),
            eq_queued: vec![false; system.equations.len()],
            clause_queued: vec![false; system.clauses.len()],
            progress,
            deadline: None,
            propagations: 0,
        }
    }

    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    /// Propagator and clause evaluations performed so far.
    pub fn propagations(&self) -> u64 {
        self.propagations
    }

    fn push(&mut self, item: Item) {
        let flag = match item {
            Item::Equation(i) => &mut self.eq_queued[i],
            Item::Clause(i) => &mut self.clause_queued[i],
        };
        if !*flag {
            *flag = true;
            self.queue.push_back(item);
        }
    }

    fn clear(&mut self) {
        self.queue.clear();
        self.eq_queued.iter_mut().for_each(|f| *f = false);
        self.clause_queued.iter_mut().for_each(|f| *f = false);
    }

    /// Schedules everything that watches `v`.
    pub fn wake(&mut self, v: VarId, significant: bool) {
        for k in 0..self.clause_watch[v.0].len() {
            self.push(Item::Clause(self.clause_watch[v.0][k]));
        }
        if significant {
            for k in 0..self.eq_watch[v.0].len() {
                self.push(Item::Equation(self.eq_watch[v.0][k]));
            }
        }
    }

    /// Schedules every equation and clause.
    pub fn wake_all(&mut self) {
        for i in 0..self.eq_queued.len() {
            self.push(Item::Equation(i));
        }
        for i in 0..self.clause_queued.len() {
            self.push(Item::Clause(i));
        }
    }

    fn apply(&mut self, bx: &mut IntervalBox, trail: &mut Vec<PropagationDelta>, d: PropagationDelta) {
        let significant = self.progress.significant(&d.old, &d.new);
        bx.set(d.var, d.new);
        let v = d.var;
        trail.push(d);
        self.wake(v, significant);
    }

    /// Runs the scheduled work to a fixpoint. Every applied contraction is
    /// appended to `trail`; a conflict leaves the box at its last nonempty
    /// state.
    pub fn run(&mut self, system: &ConstraintSystem, bx: &mut IntervalBox, trail: &mut Vec<PropagationDelta>) -> DeduceOutcome {
        while let Some(item) = self.queue.pop_front() {
            self.propagations += 1;
            if self.propagations.is_multiple_of(DEADLINE_POLL) {
                if let Some(d) = self.deadline {
                    if Instant::now() >= d {
                        self.clear();
                        return DeduceOutcome::Timeout;
                    }
                }
            }
            match item {
                Item::Equation(i) => {
                    self.eq_queued[i] = false;
                    let cause = Cause::Equation(i);
                    for d in propagate(&system.equations[i], bx, cause) {
                        if d.new.is_empty() {
                            self.clear();
                            return DeduceOutcome::Conflict(cause);
                        }
                        self.apply(bx, trail, d);
                    }
                }
                Item::Clause(i) => {
                    self.clause_queued[i] = false;
                    let cause = Cause::Clause(i);
                    match evaluate_clause(&system.clauses[i], bx) {
                        ClauseStatus::Falsified => {
                            self.clear();
                            return DeduceOutcome::Conflict(cause);
                        }
                        ClauseStatus::Unit(atom) => {
                            let old = bx.get(atom.var);
                            let new = old.intersect(&atom.as_interval());
                            if new.is_empty() {
                                self.clear();
                                return DeduceOutcome::Conflict(cause);
                            }
                            if new != old {
                                self.apply(
                                    bx,
                                    trail,
                                    PropagationDelta {
                                        var: atom.var,
                                        old,
                                        new,
                                        cause,
                                    },
                                );
                            }
                        }
                        ClauseStatus::Satisfied | ClauseStatus::Unresolved => {}
                    }
                }
            }
        }
        DeduceOutcome::Fixpoint
    }
}

/// Full deduction from scratch with default progress thresholds.
pub fn deduce(system: &ConstraintSystem, bx: &mut IntervalBox, trail: &mut Vec<PropagationDelta>) -> DeduceOutcome {
    let mut d = Deducer::new(system, Progress::default());
    d.wake_all();
    d.run(system, bx, trail)
}
