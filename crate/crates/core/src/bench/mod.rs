//! Benchmark generation and the matrix runner, plus the brute-force oracle
//! used to cross-check verdicts.

mod data;
mod matrix;
mod oracle;

pub use data::{gen_etcs_data, write_etcs_csv, EtcsRecord};
pub use matrix::{run_matrix, BenchRow, Cell, Manifest, ManifestError, Matrix, Source, CSV_HEADER};
pub use oracle::{brute_force_oracle, OracleError};

use std::fmt::Write;

use crate::formula::{parse_system, ConstraintSystem};
use crate::interval::fmt_bound;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("sum benchmark needs n >= 1, got {0}")]
pub struct SumSizeError(pub usize);

/// Text of the summation benchmark `y = Σ_{i=0}^{n} (1/n)·xᵢ` with all
/// variables in `[0, 1]`.
pub fn gen_sum_text(n: usize) -> Result<String, SumSizeError> {
    if n < 1 {
        return Err(SumSizeError(n));
    }
    let coeff = fmt_bound(1.0 / n as f64);
    let mut out = String::with_capacity(32 * (n + 1));
    let _ = writeln!(out, "# origin: sum_{n}");
    for i in 0..=n {
        let _ = writeln!(out, "var x{i} in [0, 1];");
    }
    out.push_str("var y in [0, 1];\ny = ");
    for i in 0..=n {
        if i > 0 {
            out.push_str(" + ");
        }
        let _ = write!(out, "{coeff}*x{i}");
    }
    out.push_str(";\n");
    Ok(out)
}

/// The summation benchmark as a constraint system: `n + 2` variables and
/// one affine sum with `n + 1` terms.
pub fn gen_sum(n: usize) -> Result<ConstraintSystem, SumSizeError> {
    let text = gen_sum_text(n)?;
    Ok(parse_system(&text).expect("generated sum text parses"))
}
