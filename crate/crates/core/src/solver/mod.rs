//! Branch-and-prune search over interval boxes with chronological
//! backtracking.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::formula::{BoundAtom, Clause, ConstraintSystem};
use crate::icp::{Cause, DeduceOutcome, Deducer, Progress, PropagationDelta};
use crate::interval::{Interval, IntervalBox, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitHeuristic {
    #[default]
    RoundRobin,
    WidestFirst,
}

impl FromStr for SplitHeuristic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "round_robin" | "round-robin" => Ok(SplitHeuristic::RoundRobin),
            "widest_first" | "widest-first" => Ok(SplitHeuristic::WidestFirst),
            _ => Err(format!("unknown split heuristic `{s}` (expected round_robin or widest_first)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchOrder {
    #[default]
    LowerFirst,
    UpperFirst,
}

impl FromStr for BranchOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lower_first" | "lower-first" | "lower" => Ok(BranchOrder::LowerFirst),
            "upper_first" | "upper-first" | "upper" => Ok(BranchOrder::UpperFirst),
            _ => Err(format!("unknown branch order `{s}` (expected lower_first or upper_first)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Absolute minimum splitting width.
    pub msw: f64,
    /// Minimum splitting width relative to each variable's initial width.
    pub msw_rel: f64,
    pub timeout: Duration,
    pub split_heuristic: SplitHeuristic,
    pub branch_order: BranchOrder,
    pub progress: Progress,
    /// Trail length beyond which the search gives up with `ResourceOut`.
    pub max_trail: usize,
    /// Recorded for reproducibility of benchmark runs; the built-in
    /// heuristics are deterministic and do not draw from it.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            msw: 1e-4,
            msw_rel: 1e-6,
            timeout: Duration::from_secs(60),
            split_heuristic: SplitHeuristic::RoundRobin,
            branch_order: BranchOrder::LowerFirst,
            progress: Progress::default(),
            max_trail: 50_000_000,
            seed: 0,
        }
    }
}

impl SolverConfig {
    /// Preset used for long benchmark runs.
    pub fn benchmark() -> Self {
        SolverConfig {
            timeout: Duration::from_secs(14_400),
            ..Self::default()
        }
    }

    /// Per-variable splitting width for a given initial interval.
    pub fn msw_for(&self, init: &Interval) -> f64 {
        match init.width() {
            Ok(w) if w.is_finite() => self.msw.max(self.msw_rel * w),
            _ => self.msw,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Unsat,
    Candidate(IntervalBox),
    Timeout,
    ResourceOut,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Unsat => "UNSAT",
            Outcome::Candidate(_) => "CANDIDATE",
            Outcome::Timeout => "TIMEOUT",
            Outcome::ResourceOut => "RESOURCE_OUT",
        }
    }

    /// Process exit code of the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Unsat => 0,
            Outcome::Candidate(_) => 1,
            Outcome::Timeout => 2,
            Outcome::ResourceOut => 3,
        }
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, Outcome::Unsat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stats {
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
    pub max_depth: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub stats: Stats,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.stats;
        write!(
            f,
            "{} (decisions={}, propagations={}, conflicts={}, max_depth={}, wall={:.3}s)",
            self.outcome.name(),
            s.decisions,
            s.propagations,
            s.conflicts,
            s.max_depth,
            s.wall_time.as_secs_f64()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClauseStatus {
    Satisfied,
    Falsified,
    /// Exactly one literal is undecided and all others are false.
    Unit(BoundAtom),
    Unresolved,
}

/// Truth of an atom over an interval: `Some(true)` if every value satisfies
/// it, `Some(false)` if none does.
pub fn atom_truth(atom: &BoundAtom, x: &Interval) -> Option<bool> {
    let set = atom.as_interval();
    if x.is_subset(&set) {
        Some(true)
    } else if x.intersect(&set).is_empty() {
        Some(false)
    } else {
        None
    }
}

pub fn evaluate_clause(clause: &Clause, bx: &IntervalBox) -> ClauseStatus {
    let mut open: Option<BoundAtom> = None;
    let mut open_count = 0;
    for lit in &clause.literals {
        let atom = lit.effective();
        match atom_truth(&atom, &bx.get(atom.var)) {
            Some(true) => return ClauseStatus::Satisfied,
            Some(false) => {}
            None => {
                open_count += 1;
                open = Some(atom);
            }
        }
    }
    match (open_count, open) {
        (0, _) => ClauseStatus::Falsified,
        (1, Some(a)) => ClauseStatus::Unit(a),
        _ => ClauseStatus::Unresolved,
    }
}

struct Frame {
    trail_len: usize,
    var: VarId,
    other: Interval,
    second: bool,
}

struct Search<'a> {
    system: &'a ConstraintSystem,
    config: &'a SolverConfig,
    msw: Vec<f64>,
    deducer: Deducer,
    bx: IntervalBox,
    trail: Vec<PropagationDelta>,
    cursor: usize,
    stats: Stats,
    deadline: Instant,
}

impl Search<'_> {
    fn splittable(&self, v: usize) -> Option<f64> {
        let iv = self.bx.as_slice()[v];
        let w = iv.width().ok()?;
        if w > self.msw[v] && iv.split_point().is_some() {
            Some(w)
        } else {
            None
        }
    }

    fn pick(&mut self) -> Option<VarId> {
        let n = self.bx.len();
        match self.config.split_heuristic {
            SplitHeuristic::RoundRobin => {
                for k in 0..n {
                    let v = (self.cursor + k) % n;
                    if self.splittable(v).is_some() {
                        self.cursor = (v + 1) % n;
                        return Some(VarId(v));
                    }
                }
                None
            }
            SplitHeuristic::WidestFirst => {
                let mut best: Option<(usize, f64)> = None;
                for v in 0..n {
                    if let Some(w) = self.splittable(v) {
                        if best.is_none_or(|(_, bw)| w > bw) {
                            best = Some((v, w));
                        }
                    }
                }
                best.map(|(v, _)| VarId(v))
            }
        }
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let d = self.trail.pop().expect("trail longer than len");
            self.bx.set(d.var, d.old);
        }
    }

    fn assign(&mut self, var: VarId, new: Interval) {
        let old = self.bx.get(var);
        self.bx.set(var, new);
        self.trail.push(PropagationDelta {
            var,
            old,
            new,
            cause: Cause::Decision,
        });
        self.deducer.wake(var, true);
    }

    fn run(&mut self) -> Outcome {
        if self.bx.as_slice().iter().any(Interval::is_empty) {
            return Outcome::Unsat;
        }
        self.deducer.wake_all();
        let mut frames: Vec<Frame> = Vec::new();
        loop {
            let outcome = self.deducer.run(self.system, &mut self.bx, &mut self.trail);
            if self.trail.len() > self.config.max_trail {
                return Outcome::ResourceOut;
            }
            match outcome {
                DeduceOutcome::Timeout => return Outcome::Timeout,
                DeduceOutcome::Conflict(_) => {
                    self.stats.conflicts += 1;
                    loop {
                        let Some(top) = frames.last_mut() else {
                            return Outcome::Unsat;
                        };
                        if top.second {
                            frames.pop();
                            continue;
                        }
                        top.second = true;
                        let (len, var, other) = (top.trail_len, top.var, top.other);
                        self.undo_to(len);
                        self.assign(var, other);
                        break;
                    }
                }
                DeduceOutcome::Fixpoint => {
                    if Instant::now() >= self.deadline {
                        return Outcome::Timeout;
                    }
                    let Some(var) = self.pick() else {
                        return Outcome::Candidate(self.bx.clone());
                    };
                    let (lower, upper) = self.bx.get(var).bisect().expect("splittable");
                    let (first, other) = match self.config.branch_order {
                        BranchOrder::LowerFirst => (lower, upper),
                        BranchOrder::UpperFirst => (upper, lower),
                    };
                    self.stats.decisions += 1;
                    frames.push(Frame {
                        trail_len: self.trail.len(),
                        var,
                        other,
                        second: false,
                    });
                    self.stats.max_depth = self.stats.max_depth.max(frames.len());
                    self.assign(var, first);
                }
            }
        }
    }
}

/// Decides the system within its initial bounds.
///
/// `Unsat` is a proof that no real solution exists in the initial box;
/// `Candidate` is a deduction fixpoint whose splittable intervals are all
/// narrower than the minimum splitting width.
pub fn solve(system: &ConstraintSystem, config: &SolverConfig) -> Verdict {
    let start = Instant::now();
    let deadline = start + config.timeout;
    let init = system.initial_box();
    let mut deducer = Deducer::new(system, config.progress);
    deducer.set_deadline(Some(deadline));
    let mut search = Search {
        system,
        config,
        msw: init.as_slice().iter().map(|iv| config.msw_for(iv)).collect(),
        deducer,
        bx: init,
        trail: Vec::new(),
        cursor: 0,
        stats: Stats::default(),
        deadline,
    };
    let outcome = search.run();
    let mut stats = search.stats;
    stats.propagations = search.deducer.propagations();
    stats.wall_time = start.elapsed();
    Verdict { outcome, stats }
}
