//! Python bindings for the `sigprop` verifier.
//!
//! ```python
//! import sigprop
//! v = sigprop.solve("var x in [-5, 0]; var y in [0, 1]; y = sigmoid(x); y >= 0.9;")
//! assert v.outcome == "UNSAT"
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use sigprop::bench::{gen_sum_text, Cell, Source};
use sigprop::formula::{parse_system_with, ConstraintSystem, EncodingMode};
use sigprop::icp;
use sigprop::solver::{self, Outcome, SolverConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A real interval whose bounds may each be open or closed, and infinite.
#[pyclass(name = "Interval", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyInterval(sigprop::Interval);

#[pymethods]
impl PyInterval {
    #[new]
    #[pyo3(signature = (lo, hi, lo_strict=false, hi_strict=false))]
    fn new(lo: f64, hi: f64, lo_strict: bool, hi_strict: bool) -> PyResult<Self> {
        sigprop::Interval::new(lo, lo_strict, hi, hi_strict).map(PyInterval).map_err(value_err)
    }

    #[staticmethod]
    fn empty() -> Self {
        PyInterval(sigprop::Interval::EMPTY)
    }

    #[getter]
    fn lo(&self) -> f64 {
        self.0.lo()
    }

    #[getter]
    fn hi(&self) -> f64 {
        self.0.hi()
    }

    #[getter]
    fn lo_strict(&self) -> bool {
        self.0.lo_strict()
    }

    #[getter]
    fn hi_strict(&self) -> bool {
        self.0.hi_strict()
    }

    fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn __contains__(&self, x: f64) -> bool {
        self.0.contains(x)
    }

    fn intersect(&self, other: &PyInterval) -> Self {
        PyInterval(self.0.intersect(&other.0))
    }

    fn is_subset(&self, other: &PyInterval) -> bool {
        self.0.is_subset(&other.0)
    }

    fn __repr__(&self) -> String {
        format!("Interval({})", self.0)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

/// Narrows `y` given `y = sigmoid(x)`.
#[pyfunction]
fn fwd_prop_sigmoid(x: &PyInterval, y: &PyInterval) -> PyInterval {
    PyInterval(icp::fwd_prop_sigmoid(&x.0, &y.0))
}

/// Narrows `x` given `y = sigmoid(x)`.
#[pyfunction]
fn bwd_prop_sigmoid(x: &PyInterval, y: &PyInterval) -> PyInterval {
    PyInterval(icp::bwd_prop_sigmoid(&x.0, &y.0))
}

/// Result of a solver run. `box` maps variable names to intervals and is
/// `None` unless the outcome is `"CANDIDATE"`.
#[pyclass(name = "Verdict", frozen)]
struct PyVerdict {
    #[pyo3(get)]
    outcome: String,
    #[pyo3(get)]
    exit_code: i32,
    #[pyo3(get, name = "box")]
    candidate: Option<BTreeMap<String, PyInterval>>,
    #[pyo3(get)]
    decisions: u64,
    #[pyo3(get)]
    propagations: u64,
    #[pyo3(get)]
    conflicts: u64,
    #[pyo3(get)]
    max_depth: usize,
    #[pyo3(get)]
    wall_time: f64,
    summary: String,
}

#[pymethods]
impl PyVerdict {
    fn __repr__(&self) -> String {
        format!("Verdict({})", self.summary)
    }
}

fn config(msw: Option<f64>, timeout: f64, split: &str, branch: &str) -> PyResult<SolverConfig> {
    if !(timeout > 0.0 && timeout.is_finite()) {
        return Err(value_err(format!("timeout must be positive, got {timeout}")));
    }
    let mut cfg = SolverConfig {
        timeout: Duration::from_secs_f64(timeout),
        split_heuristic: split.parse().map_err(value_err)?,
        branch_order: branch.parse().map_err(value_err)?,
        ..SolverConfig::default()
    };
    if let Some(msw) = msw {
        if !(msw > 0.0 && msw.is_finite()) {
            return Err(value_err(format!("msw must be positive, got {msw}")));
        }
        cfg.msw = msw;
    }
    Ok(cfg)
}

fn run(py: Python<'_>, system: &ConstraintSystem, cfg: &SolverConfig) -> PyVerdict {
    let v = py.detach(|| solver::solve(system, cfg));
    let candidate = match &v.outcome {
        Outcome::Candidate(bx) => Some(
            bx.iter()
                .filter(|(id, _)| !system.name(*id).starts_with('_'))
                .map(|(id, iv)| (system.name(id).to_string(), PyInterval(iv)))
                .collect(),
        ),
        _ => None,
    };
    PyVerdict {
        outcome: v.outcome.name().to_string(),
        exit_code: v.outcome.exit_code(),
        candidate,
        decisions: v.stats.decisions,
        propagations: v.stats.propagations,
        conflicts: v.stats.conflicts,
        max_depth: v.stats.max_depth,
        wall_time: v.stats.wall_time.as_secs_f64(),
        summary: v.to_string(),
    }
}

/// Parses a constraint system and decides it.
#[pyfunction]
#[pyo3(signature = (
    text, encoding="dedicated", msw=None, timeout=60.0, split="round-robin", branch="lower-first",
    approx_width=0.5, approx_range=(-8.0, 8.0)
))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    text: &str,
    encoding: &str,
    msw: Option<f64>,
    timeout: f64,
    split: &str,
    branch: &str,
    approx_width: f64,
    approx_range: (f64, f64),
) -> PyResult<PyVerdict> {
    let mode = EncodingMode::from_name(encoding, approx_width, approx_range.0, approx_range.1).map_err(value_err)?;
    let cfg = config(msw, timeout, split, branch)?;
    let system = parse_system_with(text, mode).map_err(value_err)?;
    Ok(run(py, &system, &cfg))
}

/// Checks a property (`etcs:A` .. `etcs:severe`, `mnist:<csv>:<idx>:<rival>`)
/// of a network stored as JSON.
#[pyfunction]
#[pyo3(signature = (
    net, property, encoding="dedicated", msw=None, timeout=60.0, split="round-robin", branch="lower-first",
    approx_width=0.5, approx_range=(-8.0, 8.0)
))]
#[allow(clippy::too_many_arguments)]
fn verify(
    py: Python<'_>,
    net: PathBuf,
    property: &str,
    encoding: &str,
    msw: Option<f64>,
    timeout: f64,
    split: &str,
    branch: &str,
    approx_width: f64,
    approx_range: (f64, f64),
) -> PyResult<PyVerdict> {
    let mode = EncodingMode::from_name(encoding, approx_width, approx_range.0, approx_range.1).map_err(value_err)?;
    let cfg = config(msw, timeout, split, branch)?;
    let cell = Cell {
        instance: property.to_string(),
        encoding: mode,
        source: Source::Network {
            path: net,
            property: property.to_string(),
        },
    };
    let system = cell.build().map_err(value_err)?;
    Ok(run(py, &system, &cfg))
}

/// Text of the summation benchmark with `n` inputs.
#[pyfunction]
fn gen_sum(n: usize) -> PyResult<String> {
    gen_sum_text(n).map_err(value_err)
}

#[pymodule]
#[pyo3(name = "sigprop")]
fn sigprop_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInterval>()?;
    m.add_class::<PyVerdict>()?;
    m.add_function(wrap_pyfunction!(fwd_prop_sigmoid, m)?)?;
    m.add_function(wrap_pyfunction!(bwd_prop_sigmoid, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(gen_sum, m)?)?;
    Ok(())
}
