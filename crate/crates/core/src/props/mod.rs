//! Safety properties: the ETCS braking scenarios and MNIST ε-robustness.

mod etcs;
mod mnist;

pub use etcs::{build_etcs_scenario, etcs_deceleration, etcs_ground_truth, EtcsParams, Scenario, ETCS_INPUTS};
pub use mnist::{
    build_mnist_robustness, load_idx_images, load_idx_labels, load_samples_csv, mnist_targets, MnistTarget, Sample,
    DEFAULT_EPSILON,
};

use std::fmt;
use std::str::FromStr;

use crate::formula::LowerError;

#[derive(Debug, thiserror::Error)]
pub enum PropsError {
    #[error("network arity mismatch: {0}")]
    Arity(String),
    #[error("invalid property target: {0}")]
    Target(String),
    #[error(transparent)]
    Encoding(#[from] LowerError),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed data in {path}: {msg}")]
    Data { path: String, msg: String },
}

/// A property selected on the command line or in a benchmark manifest:
/// `etcs:A|B|C|D|severe` or `mnist:<csv>:<sample-idx>:<rival>`.
#[derive(Debug, Clone, PartialEq)]
pub enum PropertySpec {
    Etcs(Scenario),
    Mnist { csv: String, sample: usize, rival: usize },
}

impl FromStr for PropertySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("etcs:") {
            return rest.parse().map(PropertySpec::Etcs);
        }
        if let Some(rest) = s.strip_prefix("mnist:") {
            // the path itself may contain ':'
            let mut parts = rest.rsplitn(3, ':');
            let rival = parts.next();
            let sample = parts.next();
            let csv = parts.next();
            if let (Some(csv), Some(sample), Some(rival)) = (csv, sample, rival) {
                let sample = sample.parse().map_err(|_| format!("bad sample index `{sample}`"))?;
                let rival = rival.parse().map_err(|_| format!("bad rival digit `{rival}`"))?;
                return Ok(PropertySpec::Mnist {
                    csv: csv.to_string(),
                    sample,
                    rival,
                });
            }
            return Err(format!("expected mnist:<csv>:<sample-idx>:<rival>, got `{s}`"));
        }
        Err(format!("unknown property `{s}` (expected etcs:<scenario> or mnist:<csv>:<idx>:<rival>)"))
    }
}

impl fmt::Display for PropertySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertySpec::Etcs(s) => write!(f, "etcs:{s}"),
            PropertySpec::Mnist { csv, sample, rival } => write!(f, "mnist:{csv}:{sample}:{rival}"),
        }
    }
}
