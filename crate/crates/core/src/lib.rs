//! Interval constraint propagation for verifying feedforward sigmoid
//! networks.
//!
//! A network and a negated safety property are encoded as a
//! [`formula::ConstraintSystem`]; [`solver::solve`] either proves it
//! unsatisfiable (the property holds) or returns a small candidate box.
//!
//! ```
//! use sigprop::formula::parse_system;
//! use sigprop::solver::{solve, Outcome, SolverConfig};
//!
//! let s = parse_system("var x in [-5, 0]; var y in [0, 1]; y = sigmoid(x); y >= 0.9;").unwrap();
//! assert_eq!(solve(&s, &SolverConfig::default()).outcome, Outcome::Unsat);
//! ```

pub mod bench;
pub mod formula;
pub mod icp;
pub mod interval;
pub mod nn;
pub mod props;
pub mod solver;

pub use formula::{parse_system, ConstraintSystem, EncodingMode};
pub use interval::{Interval, IntervalBox, VarId};
pub use solver::{solve, Outcome, SolverConfig, Verdict};
