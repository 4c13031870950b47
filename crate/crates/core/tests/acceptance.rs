//! End-to-end acceptance suite. Every criterion reports one line; the test
//! fails if any criterion fails.

mod support;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::Rng;

use sigprop::bench::{brute_force_oracle, gen_sum};
use sigprop::formula::{balance_affine_sums, sum_tree_depth, EncodingMode};
use sigprop::icp::{bwd_prop_sigmoid, fwd_prop_sigmoid};
use sigprop::formula::{BoundAtom, Relation};
use sigprop::interval::rounding::{logit_enclosure, sigmoid_enclosure};
use sigprop::interval::{Direction, Interval, VarId};
use sigprop::nn::sigmoid_box_clauses;
use sigprop::props::{etcs_deceleration, etcs_ground_truth, EtcsParams};
use sigprop::solver::{solve, Outcome, SolverConfig};

struct Report {
    passed: bool,
    detail: String,
}

fn ulps_between(a: f64, b: f64) -> u64 {
    let key = |x: f64| {
        let bits = x.to_bits() as i64;
        if bits < 0 {
            i64::MIN - bits
        } else {
            bits
        }
    };
    (key(a) - key(b)).unsigned_abs()
}

fn config(timeout: Duration) -> SolverConfig {
    SolverConfig {
        timeout,
        ..SolverConfig::default()
    }
}

// 50-digit values at the binary64 inputs -5.8, 1.3 and 0.08.
const SIG_M5_8: &str = "0.0030184163247084244677606409694574673651365790990455";
const SIG_1_3: &str = "0.78583498304255862007603715305286617208551743402941";
const LOGIT_0_08: &str = "-2.4423470353692043587626927628284489687184083823081";

fn propagator_exactness() -> Report {
    let start = Instant::now();
    let reference = |s: &str| s.parse::<f64>().unwrap();
    let x = Interval::closed(-5.8, 1.3);
    let y = Interval::closed(0.08, 0.97);

    let image = fwd_prop_sigmoid(&x, &Interval::ENTIRE);
    let y_new = fwd_prop_sigmoid(&x, &y);
    let x_new = bwd_prop_sigmoid(&x, &y);

    let errs = [
        ulps_between(image.lo(), reference(SIG_M5_8)),
        ulps_between(image.hi(), reference(SIG_1_3)),
        ulps_between(y_new.hi(), reference(SIG_1_3)),
        ulps_between(x_new.lo(), reference(LOGIT_0_08)),
        ulps_between(x_new.hi(), 1.3),
    ];
    let worst = errs.iter().copied().max().unwrap();
    let elapsed = start.elapsed();
    Report {
        passed: worst <= 2 && y_new.lo() == 0.08 && elapsed < Duration::from_secs(1),
        detail: format!("Y'={y_new:?} X'={x_new:?}, worst error {worst} ulp, {:.1?}", elapsed),
    }
}

/// Random box bound below (`hi == false`) or above a value, sometimes tight,
/// sometimes loose, sometimes infinite.
fn random_bound(rng: &mut impl Rng, at: f64, tight_strict_ok: bool, hi: bool) -> (f64, bool) {
    let sign = if hi { 1.0 } else { -1.0 };
    match rng.gen_range(0..10) {
        0 => (sign * f64::INFINITY, true),
        1..=3 => (at, tight_strict_ok && rng.gen_bool(0.5)),
        _ => (at + sign * rng.gen_range(0.0..4.0f64).powi(3), rng.gen_bool(0.5)),
    }
}

/// Doubles bracketing the exact `sig(x)`, which lies strictly between them
/// unless they coincide.
fn true_sigma(x: f64) -> (f64, f64) {
    let enc = sigmoid_enclosure(x);
    (enc.round(Direction::Down).max(0.0), enc.round(Direction::Up).min(1.0))
}

/// Truth of a bound atom on `x` (variable 0) or `y` (variable 1) at the exact
/// point `(x, sig(x))`, or `None` when binary64 brackets cannot decide it.
fn literal_at_sigmoid_point(a: BoundAtom, x: f64) -> Option<bool> {
    let at = |v: f64| match a.rel {
        Relation::Lt => v < a.constant,
        Relation::Le => v <= a.constant,
        Relation::Gt => v > a.constant,
        Relation::Ge => v >= a.constant,
    };
    if a.var == VarId(0) {
        return Some(at(x));
    }
    let (s_lo, s_hi) = true_sigma(x);
    let exact = s_lo == s_hi;
    let y = Interval::new(s_lo, !exact, s_hi, !exact).unwrap();
    let holds = a.as_interval();
    if y.is_subset(&holds) {
        return Some(true);
    }
    if y.intersect(&holds).is_empty() {
        return Some(false);
    }
    // decide through the inverse: sig(x) >= c exactly when x >= logit(c)
    if !(a.constant > 0.0 && a.constant < 1.0) {
        return None;
    }
    let enc = logit_enclosure(a.constant);
    let (l_lo, l_hi) = (enc.round(Direction::Down), enc.round(Direction::Up));
    let above = if x > l_hi || (x == l_hi && l_lo == l_hi) {
        Some(x >= l_hi)
    } else if x < l_lo {
        Some(false)
    } else {
        None
    }?;
    let strictly_above = above && !(x == l_hi && l_lo == l_hi);
    Some(match a.rel {
        Relation::Ge => above,
        Relation::Gt => strictly_above,
        Relation::Lt => !above,
        Relation::Le => !strictly_above,
    })
}

fn soundness_fuzz() -> Report {
    let start = Instant::now();
    let mut rng = support::rng(0x5eed);
    let mut lost = 0usize;
    let mut first = None;
    const POINTS: usize = 100_000;
    for i in 0..POINTS {
        let x = match i % 4 {
            0 => rng.gen_range(-40.0..40.0),
            1 => rng.gen_range(-800.0..800.0),
            _ => rng.gen_range(-8.0..8.0),
        };
        let (s_lo, s_hi) = true_sigma(x);
        let exact = s_lo == s_hi;

        let (xl, xls) = random_bound(&mut rng, x, false, false);
        let (xh, xhs) = random_bound(&mut rng, x, false, true);
        let (yl, yls) = random_bound(&mut rng, s_lo, !exact, false);
        let (yh, yhs) = random_bound(&mut rng, s_hi, !exact, true);
        let bx = Interval::new(xl, xls && xl != x, xh, xhs && xh != x).unwrap();
        let by = Interval::new(yl, yls, yh, yhs).unwrap();

        let y_new = fwd_prop_sigmoid(&bx, &by);
        let x_new = bwd_prop_sigmoid(&bx, &by);
        // sig(x) lies in [s_lo, s_hi], and strictly inside unless exact
        let keeps_y = if exact {
            y_new.contains(s_lo)
        } else {
            !y_new.is_empty() && y_new.lo() <= s_lo && y_new.hi() >= s_hi
        };
        if !keeps_y || !x_new.contains(x) {
            lost += 1;
            first.get_or_insert(format!("x={x:e} X={bx:?} Y={by:?}"));
        }
    }
    let elapsed = start.elapsed();
    Report {
        passed: lost == 0 && elapsed < Duration::from_secs(10),
        detail: format!(
            "{POINTS} points, {lost} lost{}, {:.2?}",
            first.map(|f| format!(" (first: {f})")).unwrap_or_default(),
            elapsed
        ),
    }
}

struct SuiteRow {
    fingerprint: Vec<(String, u64, u64)>,
    unsat: [bool; 2],
}

fn agreement_suite() -> (Vec<SuiteRow>, Duration) {
    let start = Instant::now();
    let cfg = config(Duration::from_secs(60));
    let rows = (0..100u64)
        .map(|seed| {
            let (net, prop) = support::suite_instance(seed);
            let mut fingerprint = Vec::new();
            let mut unsat = [false; 2];
            for (k, mode) in [EncodingMode::Dedicated, EncodingMode::Compositional].into_iter().enumerate() {
                let v = solve(&support::property_system(&net, &prop, mode), &cfg);
                unsat[k] = v.outcome.is_unsat();
                fingerprint.push((format!("{:?}", v.outcome), v.stats.decisions, v.stats.propagations));
            }
            SuiteRow { fingerprint, unsat }
        })
        .collect();
    (rows, start.elapsed())
}

fn encoding_agreement(rows: &[SuiteRow], elapsed: Duration) -> Report {
    let disagreements: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].unsat[0] != rows[i].unsat[1]).collect();
    let unsat = rows.iter().filter(|r| r.unsat[0]).count();
    let timeouts = rows
        .iter()
        .flat_map(|r| &r.fingerprint)
        .filter(|f| f.0 == "Timeout")
        .count();
    Report {
        passed: disagreements.is_empty() && elapsed < Duration::from_secs(1800),
        detail: format!(
            "{} instances, {unsat} UNSAT, {timeouts} timeouts, disagreements {:?}, {:.1?}",
            rows.len(),
            disagreements,
            elapsed
        ),
    }
}

fn abstraction_consistency() -> Report {
    let start = Instant::now();
    let approx_cfg = config(Duration::from_secs(2));
    let cfg = config(Duration::from_secs(60));
    let mut violations = Vec::new();
    let mut approx_unsat = 0;
    let mut approx_timeouts = 0;
    for seed in 0..50u64 {
        let (net, prop) = support::suite_instance(seed);
        let a = solve(&support::property_system(&net, &prop, EncodingMode::DEFAULT_APPROX), &approx_cfg);
        if a.outcome == Outcome::Timeout {
            approx_timeouts += 1;
        }
        if a.outcome.is_unsat() {
            approx_unsat += 1;
            let d = solve(&support::property_system(&net, &prop, EncodingMode::Dedicated), &cfg);
            if !d.outcome.is_unsat() {
                violations.push(seed);
            }
        }
    }

    let clauses = sigmoid_box_clauses(0.5, -8.0, 8.0, VarId(0), VarId(1)).unwrap();
    let mut rng = support::rng(4);
    let mut bad_points = 0;
    let mut ambiguous = 0;
    for i in 0..10_000 {
        let x = if i % 10 == 0 {
            // cell boundaries and their neighbours
            let b = rng.gen_range(-17..=17) as f64 * 0.5;
            [b, b.next_down(), b.next_up()][i / 10 % 3]
        } else {
            rng.gen_range(-12.0..12.0)
        };
        let verdicts: Vec<Option<bool>> = clauses
            .iter()
            .map(|c| {
                let mut undecided = false;
                for l in &c.literals {
                    match literal_at_sigmoid_point(l.effective(), x) {
                        Some(true) => return Some(true),
                        Some(false) => {}
                        None => undecided = true,
                    }
                }
                if undecided {
                    None
                } else {
                    Some(false)
                }
            })
            .collect();
        if verdicts.contains(&Some(false)) {
            bad_points += 1;
        } else if verdicts.contains(&None) {
            ambiguous += 1;
        }
    }
    Report {
        passed: violations.is_empty() && bad_points == 0,
        detail: format!(
            "50 instances, {approx_unsat} approx UNSAT, {approx_timeouts} approx timeouts (2 s), violations {violations:?}; \
             10000 points, {bad_points} outside the clause set, {ambiguous} undecided; {:.1?}",
            start.elapsed()
        ),
    }
}

fn no_false_unsat() -> Report {
    let start = Instant::now();
    let cfg = config(Duration::from_secs(60));
    let mut violations = Vec::new();
    let mut found = 0;
    let mut unsat = 0;
    for seed in 0..100u64 {
        let mut rng = support::rng(1_000 + seed);
        let inputs = rng.gen_range(1..=3);
        let net = support::random_network(&mut rng, inputs, 1);
        let prop = support::random_property(&mut rng, &net);
        let s = support::property_system(&net, &prop, EncodingMode::Dedicated);
        let grid = (1e6f64.powf(1.0 / inputs as f64)).round() as usize;
        let point = brute_force_oracle(&s, grid).expect("oracle applicable");
        let verdict = solve(&s, &cfg);
        unsat += verdict.outcome.is_unsat() as usize;
        if point.is_some() {
            found += 1;
            if verdict.outcome.is_unsat() {
                violations.push(seed);
            }
        }
    }
    let elapsed = start.elapsed();
    Report {
        passed: violations.is_empty() && elapsed < Duration::from_secs(900),
        detail: format!(
            "100 instances, oracle found {found} counterexamples, solver {unsat} UNSAT, violations {violations:?}, {:.1?}",
            elapsed
        ),
    }
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn preprocessing() -> Report {
    let start = Instant::now();
    let mut timings = Vec::new();
    let mut bad_depths = Vec::new();
    let mut big = Duration::ZERO;
    for e in 0..=12 {
        let n = 1usize << e;
        let reps = (4096 / n).max(4);
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let t = Instant::now();
            for _ in 0..reps {
                std::hint::black_box(balance_affine_sums(&gen_sum(n).unwrap()));
            }
            best = best.min(t.elapsed().as_secs_f64() / reps as f64);
        }
        timings.push((n as f64, best));

        let t = Instant::now();
        let s = balance_affine_sums(&gen_sum(n).unwrap());
        if n == 4096 {
            big = t.elapsed();
        }
        let y = s.lookup("y").unwrap();
        let root = s.equations.iter().position(|eq| eq.output() == y).unwrap();
        let depth = sum_tree_depth(&s, root);
        let expected = (usize::BITS - n.leading_zeros()) as usize; // ceil(log2(n + 1))
        if depth != expected {
            bad_depths.push((n, depth, expected));
        }
    }
    let slope = loglog_slope(&timings);

    let sum256 = balance_affine_sums(&gen_sum(256).unwrap());
    let v = solve(&sum256, &config(Duration::from_secs(300)));
    let candidate = matches!(v.outcome, Outcome::Candidate(_));

    Report {
        passed: slope <= 1.5 && bad_depths.is_empty() && big < Duration::from_secs(300) && candidate,
        detail: format!(
            "slope {slope:.3}, depth mismatches {bad_depths:?}, n=4096 in {big:.1?}, sum_256 {} in {:.1?}; {:.1?}",
            v.outcome.name(),
            v.stats.wall_time,
            start.elapsed()
        ),
    }
}

fn etcs_physics() -> Report {
    let p = EtcsParams::default();
    let mut notes = Vec::new();
    let mut ok = true;
    for (v, x_h, x_r, want_db, want_brake) in [
        (25.0, 15000.0, 35000.0, 19600.0, false),
        (0.0, 1000.0, 30000.0, 28600.0, false),
        (25.0, 0.0, 500.0, 100.0, true),
    ] {
        let (d_b, a) = etcs_deceleration(v, x_h, x_r, &p);
        let direct = -(v * v) / (2.0 * (x_r - (x_h + p.safety_distance)));
        let brake = etcs_ground_truth(v, x_h, x_r, &p);
        let good = d_b == want_db && ulps_between(a, direct) <= 1 && brake == want_brake;
        ok &= good;
        notes.push(format!("v={v} d_b={d_b} a={a} braking={brake}"));
    }
    ok &= etcs_deceleration(25.0, 15000.0, 35000.0, &p).1 == -625.0 / 39200.0;
    ok &= etcs_deceleration(25.0, 0.0, 500.0, &p).1 == -3.125;
    Report {
        passed: ok,
        detail: notes.join("; "),
    }
}

fn determinism(first: &[SuiteRow]) -> Report {
    let (second, elapsed) = agreement_suite();
    let diffs: Vec<usize> = (0..first.len()).filter(|&i| first[i].fingerprint != second[i].fingerprint).collect();
    Report {
        passed: diffs.is_empty() && second.len() == first.len(),
        detail: format!("re-ran {} instances, {} differ {diffs:?}, {:.1?}", second.len(), diffs.len(), elapsed),
    }
}

#[test]
fn acceptance_criteria() {
    let (suite, suite_time) = agreement_suite();
    let reports = [
        ("propagator exactness", propagator_exactness()),
        ("soundness fuzz", soundness_fuzz()),
        ("dedicated/compositional agreement", encoding_agreement(&suite, suite_time)),
        ("abstraction consistency", abstraction_consistency()),
        ("no false UNSAT", no_false_unsat()),
        ("preprocessing", preprocessing()),
        ("ETCS physics", etcs_physics()),
        ("determinism", determinism(&suite)),
    ];
    let mut err = std::io::stderr().lock();
    for (i, (name, r)) in reports.iter().enumerate() {
        let _ = writeln!(err, "criterion {} {name}: {} ({})", i + 1, if r.passed { "PASS" } else { "FAIL" }, r.detail);
    }
    drop(err);
    let failed: Vec<usize> = (0..reports.len()).filter(|&i| !reports[i].1.passed).map(|i| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
