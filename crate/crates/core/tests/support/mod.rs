//! Random networks and scenario-style properties shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sigprop::formula::{BoundAtom, ConstraintSystem, EncodingMode, Relation};
use sigprop::icp::Equation;
use sigprop::interval::Interval;
use sigprop::nn::{encode_network, Activation, Layer, Network};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fully connected net with `inputs` inputs, 1 to `max_hidden` sigmoid
/// hidden layers of 1 to 4 neurons, and two outputs.
pub fn random_network(rng: &mut impl Rng, inputs: usize, max_hidden: usize) -> Network {
    let hidden = rng.gen_range(1..=max_hidden);
    let mut layers = Vec::new();
    let mut width = inputs;
    for l in 0..=hidden {
        let out = if l == hidden { 2 } else { rng.gen_range(1..=4) };
        let activation = if l < hidden || rng.gen_bool(0.5) {
            Activation::Sigmoid
        } else {
            Activation::Linear
        };
        layers.push(Layer {
            weights: (0..out).map(|_| (0..width).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect(),
            biases: (0..out).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            activation,
        });
        width = out;
    }
    Network {
        input_dim: inputs,
        prescale: None,
        layers,
    }
}

/// Input box plus the threshold of the negated output property
/// `out0 − out1 > threshold`.
#[derive(Debug, Clone)]
pub struct Property {
    pub input_box: Vec<(f64, f64)>,
    pub threshold: f64,
}

/// A box around a random centre and a threshold near the output difference
/// there, so that both outcomes occur.
pub fn random_property(rng: &mut impl Rng, net: &Network) -> Property {
    let centre: Vec<f64> = (0..net.input_dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let input_box: Vec<(f64, f64)> = centre
        .iter()
        .map(|&c| {
            let r = rng.gen_range(0.05..0.5);
            (c - r, c + r)
        })
        .collect();
    let out = net.evaluate(&centre);
    let threshold = out[0] - out[1] + rng.gen_range(-0.2..0.4);
    Property { input_box, threshold }
}

pub fn property_system(net: &Network, prop: &Property, mode: EncodingMode) -> ConstraintSystem {
    let enc = encode_network(net, mode).expect("encodable");
    let mut s = enc.system;
    for (&x, &(lo, hi)) in enc.inputs.iter().zip(&prop.input_box) {
        s.set_init(x, Interval::closed(lo, hi));
    }
    let d = s.fresh("d", Interval::ENTIRE);
    s.add_equation(Equation::AffineSum {
        y: d,
        terms: vec![(1.0, enc.outputs[0]), (-1.0, enc.outputs[1])],
        constant: 0.0,
    });
    s.assert_atom(BoundAtom::new(d, Relation::Gt, prop.threshold));
    s
}

/// One agreement-suite instance: network and property drawn from `seed`.
pub fn suite_instance(seed: u64) -> (Network, Property) {
    let mut r = rng(seed);
    let inputs = r.gen_range(1..=3);
    let net = random_network(&mut r, inputs, 2);
    let prop = random_property(&mut r, &net);
    (net, prop)
}
