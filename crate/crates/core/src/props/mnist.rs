use std::path::Path;

use crate::formula::{BoundAtom, ConstraintSystem, EncodingMode, Relation};
use crate::icp::Equation;
use crate::interval::{rounding, Direction, Interval};
use crate::nn::{encode_network, Network};

use super::PropsError;

pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub label: usize,
    /// Pixel intensities in `[0, 1]`.
    pub pixels: Vec<f64>,
}

/// One robustness query: can `rival` score at least as high as `label`
/// anywhere in the ε-box around `sample`?
#[derive(Debug, Clone, PartialEq)]
pub struct MnistTarget {
    pub sample: Vec<f64>,
    pub label: usize,
    pub rival: usize,
    pub epsilon: f64,
}

/// The nine targets of one sample, one per rival digit.
pub fn mnist_targets(sample: &Sample, epsilon: f64) -> Vec<MnistTarget> {
    (0..10)
        .filter(|&i| i != sample.label)
        .map(|rival| MnistTarget {
            sample: sample.pixels.clone(),
            label: sample.label,
            rival,
            epsilon,
        })
        .collect()
}

/// Encodes the ε-box around the sample and the constraint `out_rival ≥ out_label`.
/// UNSAT for all nine rivals certifies ε-robustness of the sample.
pub fn build_mnist_robustness(target: &MnistTarget, net: &Network, mode: EncodingMode) -> Result<ConstraintSystem, PropsError> {
    if target.label == target.rival {
        return Err(PropsError::Target("rival digit equals the true digit".into()));
    }
    if !(target.epsilon >= 0.0 && target.epsilon.is_finite()) {
        return Err(PropsError::Target(format!("epsilon must be finite and nonnegative, got {}", target.epsilon)));
    }
    if target.sample.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(PropsError::Target("sample components must lie in [0, 1]".into()));
    }
    if net.input_dim != target.sample.len() {
        return Err(PropsError::Arity(format!(
            "sample has {} components but the network takes {} inputs",
            target.sample.len(),
            net.input_dim
        )));
    }
    if net.output_dim() <= target.label.max(target.rival) {
        return Err(PropsError::Arity(format!(
            "network has {} outputs, digits {} and {} requested",
            net.output_dim(),
            target.label,
            target.rival
        )));
    }
    let enc = encode_network(net, mode)?;
    let mut s = enc.system;
    s.metadata.origin = format!("mnist:{}:{}", target.label, target.rival);
    for (&x, &sk) in enc.inputs.iter().zip(&target.sample) {
        let lo = rounding::sub(sk, target.epsilon, Direction::Down).max(0.0);
        let hi = rounding::add(sk, target.epsilon, Direction::Up).min(1.0);
        s.set_init(x, Interval::closed(lo, hi));
    }
    let d = s.fresh("d", Interval::ENTIRE);
    s.add_equation(Equation::AffineSum {
        y: d,
        terms: vec![(1.0, enc.outputs[target.rival]), (-1.0, enc.outputs[target.label])],
        constant: 0.0,
    });
    s.assert_atom(BoundAtom::new(d, Relation::Ge, 0.0));
    Ok(s)
}

fn io_err(path: &Path, source: std::io::Error) -> PropsError {
    PropsError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn data_err(path: &Path, msg: impl Into<String>) -> PropsError {
    PropsError::Data {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

/// Reads samples from CSV rows `digit, p₀, …, p₇₈₃` with pixels in `[0, 1]`.
pub fn load_samples_csv(path: impl AsRef<Path>) -> Result<Vec<Sample>, PropsError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(path, e.to_string()))?;
    let mut out: Vec<Sample> = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| data_err(path, e.to_string()))?;
        let mut fields = rec.iter();
        let label: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .filter(|&d| d < 10)
            .ok_or_else(|| data_err(path, format!("row {}: first column must be a digit 0-9", row + 1)))?;
        let pixels = fields
            .map(|f| f.parse::<f64>().ok().filter(|p| (0.0..=1.0).contains(p)))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| data_err(path, format!("row {}: pixels must be numbers in [0, 1]", row + 1)))?;
        if let Some(first) = out.first() {
            if first.pixels.len() != pixels.len() {
                return Err(data_err(path, format!("row {}: expected {} pixels", row + 1, first.pixels.len())));
            }
        }
        out.push(Sample { label, pixels });
    }
    Ok(out)
}

fn be_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes.get(at..at + 4).map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

/// Reads an IDX image file (magic `0x00000803`), scaling pixels by `1/255`.
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>, PropsError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    if be_u32(&bytes, 0) != Some(0x0803) {
        return Err(data_err(path, "not an IDX image file (bad magic)"));
    }
    let header = (be_u32(&bytes, 4), be_u32(&bytes, 8), be_u32(&bytes, 12));
    let (Some(n), Some(rows), Some(cols)) = header else {
        return Err(data_err(path, "truncated header"));
    };
    let (n, size) = (n as usize, rows as usize * cols as usize);
    let body = &bytes[16..];
    if body.len() != n * size {
        return Err(data_err(path, format!("expected {} pixel bytes, found {}", n * size, body.len())));
    }
    Ok(body
        .chunks(size.max(1))
        .take(n)
        .map(|img| img.iter().map(|&p| p as f64 / 255.0).collect())
        .collect())
}

/// Reads an IDX label file (magic `0x00000801`).
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<usize>, PropsError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    if be_u32(&bytes, 0) != Some(0x0801) {
        return Err(data_err(path, "not an IDX label file (bad magic)"));
    }
    let n = be_u32(&bytes, 4).ok_or_else(|| data_err(path, "truncated header"))? as usize;
    let body = &bytes[8..];
    if body.len() != n {
        return Err(data_err(path, format!("expected {n} labels, found {}", body.len())));
    }
    Ok(body.iter().map(|&b| b as usize).collect())
}
