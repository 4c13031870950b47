//! Feedforward sigmoid networks and their encoding as constraint systems.

mod approx;

pub use approx::{sigmoid_box_clauses, GridError};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::formula::{BoundAtom, ConstraintSystem, EncodingMode, LowerError, Lowerer, Relation};
use crate::icp::Equation;
use crate::interval::{Interval, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    /// Row-major `out × in` matrix.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn output_dim(&self) -> usize {
        self.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub input_dim: usize,
    /// Per-input `(scale, offset)` applied before the first layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prescale: Option<Vec<(f64, f64)>>,
    pub layers: Vec<Layer>,
}

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("cannot read network: {0}")]
    Io(#[from] std::io::Error),
    #[error("network JSON does not match the schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("network has no layers")]
    NoLayers,
}

impl Network {
    pub fn from_json(text: &str) -> Result<Network, NetworkError> {
        let net: Network = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("networks always serialize")
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim, Layer::output_dim)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.layers.is_empty() {
            return Err(NetworkError::NoLayers);
        }
        if let Some(p) = &self.prescale {
            if p.len() != self.input_dim {
                return Err(NetworkError::Dimension(format!(
                    "prescale has {} entries for {} inputs",
                    p.len(),
                    self.input_dim
                )));
            }
            if p.iter().any(|(s, o)| !s.is_finite() || !o.is_finite() || *s == 0.0) {
                return Err(NetworkError::NonFinite("prescale (scales must also be nonzero)".into()));
            }
        }
        let mut width = self.input_dim;
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.weights.len() != layer.biases.len() {
                return Err(NetworkError::Dimension(format!(
                    "layer {l}: {} weight rows but {} biases",
                    layer.weights.len(),
                    layer.biases.len()
                )));
            }
            if layer.biases.is_empty() {
                return Err(NetworkError::Dimension(format!("layer {l} has no neurons")));
            }
            for (j, row) in layer.weights.iter().enumerate() {
                if row.len() != width {
                    return Err(NetworkError::Dimension(format!(
                        "layer {l}, neuron {j}: {} weights but {width} inputs",
                        row.len()
                    )));
                }
                if row.iter().any(|w| !w.is_finite()) {
                    return Err(NetworkError::NonFinite(format!("layer {l}, neuron {j} weights")));
                }
            }
            if layer.biases.iter().any(|b| !b.is_finite()) {
                return Err(NetworkError::NonFinite(format!("layer {l} biases")));
            }
            width = layer.output_dim();
        }
        Ok(())
    }

    /// Forward pass in binary64, summing in the same order as the encoded equations.
    pub fn evaluate(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.input_dim, "input arity");
        let mut cur: Vec<f64> = match &self.prescale {
            Some(p) => input.iter().zip(p).map(|(x, (s, o))| s.mul_add(*x, *o)).collect(),
            None => input.to_vec(),
        };
        for layer in &self.layers {
            cur = layer
                .weights
                .iter()
                .zip(&layer.biases)
                .map(|(row, b)| {
                    let pre = row
                        .iter()
                        .zip(&cur)
                        .filter(|(w, _)| **w != 0.0)
                        .fold(*b, |acc, (w, x)| w.mul_add(*x, acc));
                    match layer.activation {
                        Activation::Sigmoid => 1.0 / (1.0 + (-pre).exp()),
                        Activation::Linear => pre,
                    }
                })
                .collect();
        }
        cur
    }
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network, NetworkError> {
    Network::from_json(&std::fs::read_to_string(path)?)
}

/// A network encoded into a constraint system.
#[derive(Debug, Clone)]
pub struct EncodedNetwork {
    pub system: ConstraintSystem,
    pub inputs: Vec<VarId>,
    pub outputs: Vec<VarId>,
}

/// Encodes `net` with inputs named `in0, in1, …` and outputs `out0, out1, …`.
pub fn encode_network(net: &Network, mode: EncodingMode) -> Result<EncodedNetwork, LowerError> {
    let names: Vec<String> = (0..net.input_dim).map(|k| format!("in{k}")).collect();
    encode_network_named(net, mode, &names)
}

/// Like [`encode_network`] with caller-chosen input names.
///
/// Per neuron the pre-activation `h{l}_{j}` is an affine sum of the previous
/// layer; a sigmoid neuron adds its post-activation `a{l}_{j}` under `mode`.
pub fn encode_network_named(net: &Network, mode: EncodingMode, input_names: &[String]) -> Result<EncodedNetwork, LowerError> {
    assert_eq!(input_names.len(), net.input_dim, "one name per input");
    let mut system = ConstraintSystem::new();
    system.metadata.origin = "network".to_string();
    system.metadata.encoding = Some(mode.name().to_string());

    let inputs: Vec<VarId> = input_names
        .iter()
        .map(|n| system.fresh(n, Interval::ENTIRE))
        .collect();
    let mut cur = inputs.clone();
    if let Some(p) = &net.prescale {
        cur = inputs
            .iter()
            .zip(p)
            .enumerate()
            .map(|(k, (&x, &(s, o)))| {
                let v = system.fresh(&format!("s{k}"), Interval::ENTIRE);
                system.add_equation(Equation::AffineSum {
                    y: v,
                    terms: vec![(s, x)],
                    constant: o,
                });
                v
            })
            .collect();
    }

    let last = net.layers.len() - 1;
    for (l, layer) in net.layers.iter().enumerate() {
        let mut next = Vec::with_capacity(layer.output_dim());
        for (j, (row, &b)) in layer.weights.iter().zip(&layer.biases).enumerate() {
            let is_out = l == last;
            let pre_name = match (is_out, layer.activation) {
                (true, Activation::Linear) => format!("out{j}"),
                _ => format!("h{l}_{j}"),
            };
            let h = system.fresh(&pre_name, Interval::ENTIRE);
            let terms: Vec<(f64, VarId)> = row
                .iter()
                .zip(&cur)
                .filter(|(w, _)| **w != 0.0)
                .map(|(&w, &x)| (w, x))
                .collect();
            if terms.is_empty() {
                system.assert_atom(BoundAtom::new(h, Relation::Ge, b));
                system.assert_atom(BoundAtom::new(h, Relation::Le, b));
            } else {
                system.add_equation(Equation::AffineSum { y: h, terms, constant: b });
            }
            let value = match layer.activation {
                Activation::Linear => h,
                Activation::Sigmoid => {
                    let name = if is_out { format!("out{j}") } else { format!("a{l}_{j}") };
                    let range = match mode {
                        EncodingMode::Approximating { .. } => Interval::closed(0.0, 1.0),
                        _ => Interval::open(0.0, 1.0),
                    };
                    let z = system.fresh(&name, range);
                    Lowerer::new(&mut system, mode).sigmoid_into(z, h)?;
                    z
                }
            };
            next.push(value);
        }
        cur = next;
    }
    Ok(EncodedNetwork {
        system,
        inputs,
        outputs: cur,
    })
}
