use std::fmt;
use std::str::FromStr;

use crate::formula::{BoundAtom, ConstraintSystem, EncodingMode, Relation};
use crate::icp::Equation;
use crate::interval::{Interval, VarId};
use crate::nn::{encode_network_named, Network};

use super::PropsError;

/// Input names of an ETCS network: velocity, position of the train head,
/// and position of the rear of the train ahead.
pub const ETCS_INPUTS: [&str; 3] = ["v", "x_h", "x_r"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtcsParams {
    /// Safety distance (m).
    pub safety_distance: f64,
    /// Maximum deceleration (m/s², negative).
    pub a_max: f64,
    /// Maximum velocity (m/s).
    pub v_max: f64,
    /// Track length (m).
    pub track_len: f64,
}

impl Default for EtcsParams {
    fn default() -> Self {
        EtcsParams {
            safety_distance: 400.0,
            a_max: -0.7,
            v_max: 83.4,
            track_len: 50_000.0,
        }
    }
}

/// Braking distance `d_b = x_r − (x_h + S)` and required deceleration
/// `a = −v² / (2 d_b)`.
pub fn etcs_deceleration(v: f64, x_h: f64, x_r: f64, p: &EtcsParams) -> (f64, f64) {
    let d_b = x_r - (x_h + p.safety_distance);
    (d_b, -(v * v) / (2.0 * d_b))
}

/// Whether the train has to brake: the deceleration needed to stop within
/// the braking distance exceeds the maximum. With no braking distance left
/// any movement requires braking.
pub fn etcs_ground_truth(v: f64, x_h: f64, x_r: f64, p: &EtcsParams) -> bool {
    let (d_b, a) = etcs_deceleration(v, x_h, x_r, p);
    if d_b > 0.0 {
        a < p.a_max
    } else {
        v > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Inputs restricted to the global ranges only.
    A,
    /// The train ahead is in front: `x_r > x_h`.
    B,
    /// `v > 25`, `x_h = 15000`, `x_r = 35000`.
    C,
    /// `v > 25`, `x_h < 800`, `x_r < 800`.
    D,
    /// `v ∈ (20, 80]` and `x_r − x_h ∈ [0, S]`.
    Severe,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [Scenario::A, Scenario::B, Scenario::C, Scenario::D, Scenario::Severe];
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Scenario::A),
            "B" | "b" => Ok(Scenario::B),
            "C" | "c" => Ok(Scenario::C),
            "D" | "d" => Ok(Scenario::D),
            "severe" | "SEVERE" | "Severe" => Ok(Scenario::Severe),
            _ => Err(format!("unknown ETCS scenario `{s}` (expected A, B, C, D or severe)")),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::A => "A",
            Scenario::B => "B",
            Scenario::C => "C",
            Scenario::D => "D",
            Scenario::Severe => "severe",
        })
    }
}

fn difference(system: &mut ConstraintSystem, name: &str, plus: VarId, minus: VarId) -> VarId {
    let d = system.fresh(name, Interval::ENTIRE);
    system.add_equation(Equation::AffineSum {
        y: d,
        terms: vec![(1.0, plus), (-1.0, minus)],
        constant: 0.0,
    });
    d
}

/// Encodes `net` together with the scenario's input constraints and the
/// negated safety property `out0 > out1`. UNSAT means the network advises
/// braking everywhere in the scenario.
pub fn build_etcs_scenario(
    scenario: Scenario,
    net: &Network,
    params: &EtcsParams,
    mode: EncodingMode,
) -> Result<ConstraintSystem, PropsError> {
    if net.input_dim != 3 || net.output_dim() != 2 {
        return Err(PropsError::Arity(format!(
            "ETCS networks map 3 inputs to 2 outputs, got {} -> {}",
            net.input_dim,
            net.output_dim()
        )));
    }
    let names: Vec<String> = ETCS_INPUTS.iter().map(|s| s.to_string()).collect();
    let enc = encode_network_named(net, mode, &names)?;
    let mut s = enc.system;
    s.metadata.origin = format!("etcs:{scenario}");
    let (v, x_h, x_r) = (enc.inputs[0], enc.inputs[1], enc.inputs[2]);

    s.set_init(v, Interval::closed(0.0, params.v_max));
    s.set_init(x_h, Interval::closed(0.0, params.track_len));
    s.set_init(x_r, Interval::closed(0.0, params.track_len));

    let atom = BoundAtom::new;
    match scenario {
        Scenario::A => {}
        Scenario::B => {
            let gap = difference(&mut s, "gap", x_r, x_h);
            s.assert_atom(atom(gap, Relation::Gt, 0.0));
        }
        Scenario::C => {
            s.assert_atom(atom(v, Relation::Gt, 25.0));
            s.assert_atom(atom(x_h, Relation::Ge, 15_000.0));
            s.assert_atom(atom(x_h, Relation::Le, 15_000.0));
            s.assert_atom(atom(x_r, Relation::Ge, 35_000.0));
            s.assert_atom(atom(x_r, Relation::Le, 35_000.0));
        }
        Scenario::D => {
            s.assert_atom(atom(v, Relation::Gt, 25.0));
            s.assert_atom(atom(x_h, Relation::Lt, 800.0));
            s.assert_atom(atom(x_r, Relation::Lt, 800.0));
        }
        Scenario::Severe => {
            s.assert_atom(atom(v, Relation::Gt, 20.0));
            s.assert_atom(atom(v, Relation::Le, 80.0));
            let gap = difference(&mut s, "gap", x_r, x_h);
            s.assert_atom(atom(gap, Relation::Ge, 0.0));
            s.assert_atom(atom(gap, Relation::Le, params.safety_distance));
        }
    }

    let d = difference(&mut s, "d", enc.outputs[0], enc.outputs[1]);
    s.assert_atom(atom(d, Relation::Gt, 0.0));
    Ok(s)
}
