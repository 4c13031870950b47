use std::time::Duration;

use proptest::prelude::*;

use sigprop::bench::brute_force_oracle;
use sigprop::formula::{BoundAtom, Relation};
use sigprop::icp::{deduce, Cause, DeduceOutcome, Equation, PropagationDelta};
use sigprop::interval::{Interval, VarId};
use sigprop::solver::{solve, BranchOrder, Outcome, SolverConfig, SplitHeuristic};
use sigprop::ConstraintSystem;

#[derive(Debug, Clone)]
struct Tiny {
    boxes: [(f64, f64); 3],
    eqs: Vec<(u8, usize, usize, f64, f64)>,
    probe: [f64; 3],
    thresholds: Vec<(bool, f64)>,
}

fn tiny() -> impl Strategy<Value = Tiny> {
    let range = (-3.0f64..3.0, 0.01f64..2.0).prop_map(|(c, r)| (c - r, c + r));
    (
        [range.clone(), range.clone(), range],
        prop::collection::vec((0u8..5, 0usize..8, 0usize..8, -2.0f64..2.0, -1.0f64..1.0), 1..=4),
        prop::array::uniform3(0.0f64..1.0),
        prop::collection::vec((any::<bool>(), -0.3f64..0.3), 1..=2),
    )
        .prop_map(|(boxes, eqs, probe, thresholds)| Tiny { boxes, eqs, probe, thresholds })
}

/// Three bounded inputs, up to four equations over earlier variables, and
/// bounds on the last outputs placed near their value at a probe point.
fn build(t: &Tiny) -> ConstraintSystem {
    let mut s = ConstraintSystem::new();
    let mut vars: Vec<VarId> = (0..3)
        .map(|i| s.declare(&format!("x{i}"), Interval::closed(t.boxes[i].0, t.boxes[i].1)).unwrap())
        .collect();
    let mut value: Vec<f64> = (0..3).map(|i| t.boxes[i].0 + t.probe[i] * (t.boxes[i].1 - t.boxes[i].0)).collect();
    for (k, &(kind, a, b, c, d)) in t.eqs.iter().enumerate() {
        let (xa, xb) = (vars[a % vars.len()], vars[b % vars.len()]);
        let y = s.declare(&format!("h{k}"), Interval::ENTIRE).unwrap();
        let eq = match kind {
            0 => Equation::Sigmoid { y, x: xa },
            1 => Equation::Neg { y, x: xa },
            2 => Equation::Product { y, x1: xa, x2: xb },
            3 => Equation::Exp { y, x: xa },
            _ if xa == xb => Equation::AffineSum { y, terms: vec![(c + 2.5, xa)], constant: d },
            _ => Equation::AffineSum {
                y,
                terms: vec![(c + 2.5, xa), (d - 1.5, xb)],
                constant: d,
            },
        };
        value.push(eq.eval(|v| value[v.0]));
        s.add_equation(eq);
        vars.push(y);
    }
    for (i, &(above, shift)) in t.thresholds.iter().enumerate() {
        let v = vars[vars.len() - 1 - i];
        let at = value[v.0] + shift * value[v.0].abs().max(1.0);
        if !at.is_finite() {
            continue;
        }
        let rel = if above { Relation::Ge } else { Relation::Le };
        s.assert_atom(BoundAtom::new(v, rel, at));
    }
    s
}

fn config(split: bool, upper: bool) -> SolverConfig {
    SolverConfig {
        timeout: Duration::from_secs(10),
        split_heuristic: if split { SplitHeuristic::WidestFirst } else { SplitHeuristic::RoundRobin },
        branch_order: if upper { BranchOrder::UpperFirst } else { BranchOrder::LowerFirst },
        ..SolverConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn oracle_point_rules_out_unsat(t in tiny(), split in any::<bool>(), upper in any::<bool>()) {
        let s = build(&t);
        let point = brute_force_oracle(&s, 100).unwrap();
        let v = solve(&s, &config(split, upper));
        prop_assert_ne!(&v.outcome, &Outcome::Timeout);
        if point.is_some() {
            prop_assert!(!v.outcome.is_unsat(), "oracle point {:?} but UNSAT\n{}", point, s);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn coarse_search_terminates_deterministically(t in tiny(), split in any::<bool>(), upper in any::<bool>()) {
        let s = build(&t);
        let cfg = SolverConfig { msw: 1e-2, ..config(split, upper) };
        let a = solve(&s, &cfg);
        let b = solve(&s, &cfg);
        prop_assert!(matches!(a.outcome, Outcome::Unsat | Outcome::Candidate(_)));
        prop_assert_eq!(&a.outcome, &b.outcome);
        prop_assert_eq!(
            (a.stats.decisions, a.stats.propagations, a.stats.conflicts, a.stats.max_depth),
            (b.stats.decisions, b.stats.propagations, b.stats.conflicts, b.stats.max_depth)
        );
    }

    #[test]
    fn undoing_a_decision_restores_the_box(t in tiny(), which in 0usize..3, upper in any::<bool>()) {
        let s = build(&t);
        let mut bx = s.initial_box();
        let mut trail: Vec<PropagationDelta> = Vec::new();
        prop_assume!(deduce(&s, &mut bx, &mut trail) == DeduceOutcome::Fixpoint);
        let before = bx.clone();
        let mark = trail.len();

        let var = VarId(which);
        let Some((lo, hi)) = bx.get(var).bisect() else { return Ok(()) };
        let half = if upper { hi } else { lo };
        trail.push(PropagationDelta { var, old: bx.get(var), new: half, cause: Cause::Decision });
        bx.set(var, half);
        let _ = deduce(&s, &mut bx, &mut trail);

        while trail.len() > mark {
            let d = trail.pop().unwrap();
            bx.set(d.var, d.old);
        }
        for (a, b) in before.as_slice().iter().zip(bx.as_slice()) {
            prop_assert_eq!(a.lo().to_bits(), b.lo().to_bits());
            prop_assert_eq!(a.hi().to_bits(), b.hi().to_bits());
            prop_assert_eq!((a.lo_strict(), a.hi_strict()), (b.lo_strict(), b.hi_strict()));
        }
    }
}
