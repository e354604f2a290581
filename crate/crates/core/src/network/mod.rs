//! Fully connected ReLU networks.
//!
//! Layers are numbered `1..=K` with layer 1 the input and layer `K` the
//! output. Node indices inside a layer are 1-based as well, so `NodeId::new(2, 1)`
//! is the first node of the first hidden layer. The hidden layers `2..K` apply
//! ReLU; the output layer only carries pre-activation values.

mod format;
mod trace;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use format::{load_network, parse_network, save_network, write_network};
pub use trace::ActivationTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("malformed network document: {0}")]
    Malformed(String),
    #[error("shape mismatch at layer {layer}: {detail}")]
    ShapeMismatch { layer: usize, detail: String },
    #[error("non-finite {what} at layer {layer}")]
    NonFinite { layer: usize, what: &'static str },
    #[error("expected an input of dimension {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("input contains a non-finite entry at position {0}")]
    NonFiniteInput(usize),
    #[error("node {0} is not a hidden node of this network")]
    NotHidden(NodeId),
    #[error("invalid gradient objective: {0}")]
    InvalidObjective(String),
    #[error("traces were produced by different networks")]
    ForeignTrace,
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Activation sign of a node: `+1` when `u >= 0`, `-1` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    #[inline]
    pub fn of(u: f64) -> Sign {
        if u >= 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "+1",
            Sign::Negative => "-1",
        })
    }
}

impl Serialize for Sign {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.as_i8())
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match i8::deserialize(d)? {
            1 => Ok(Sign::Positive),
            -1 => Ok(Sign::Negative),
            other => Err(serde::de::Error::custom(format!(
                "sign must be 1 or -1, got {other}"
            ))),
        }
    }
}

/// A node `n_{layer,index}`, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub layer: usize,
    pub index: usize,
}

impl NodeId {
    pub const fn new(layer: usize, index: usize) -> Self {
        NodeId { layer, index }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n({},{})", self.layer, self.index)
    }
}

/// Closed interval `[lo, hi]` bounding one input dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Content hash of a network; traces, bounds and pattern sets carry it so
/// that mixing artefacts of different networks is detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint([u8; 16]);

impl Fingerprint {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Fingerprint> {
        let bytes = hex::decode(s).ok()?;
        let arr: [u8; 16] = bytes.try_into().ok()?;
        Some(Fingerprint(arr))
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Fingerprint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Fingerprint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Fingerprint::from_hex(&s).ok_or_else(|| serde::de::Error::custom("invalid fingerprint"))
    }
}

/// Weights and biases feeding layer `k + 1` from layer `k`.
///
/// `weights` is row-major with shape `inputs x outputs`, so
/// `weights[h * outputs + l]` is `w_{k,h,l}` (0-based `h`, `l`).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl DenseLayer {
    pub fn new(inputs: usize, outputs: usize, weights: Vec<f64>, biases: Vec<f64>) -> Self {
        DenseLayer {
            inputs,
            outputs,
            weights,
            biases,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// Weight from input `from` to output `to`, both 0-based.
    #[inline]
    pub fn weight(&self, from: usize, to: usize) -> f64 {
        self.weights[from * self.outputs + to]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// `u = W^T v + b`.
    pub fn forward(&self, v: &[f64]) -> Vec<f64> {
        let mut u = self.biases.clone();
        for (h, &vh) in v.iter().enumerate() {
            if vh == 0.0 {
                continue;
            }
            let row = &self.weights[h * self.outputs..(h + 1) * self.outputs];
            for (ul, &w) in u.iter_mut().zip(row) {
                *ul += w * vh;
            }
        }
        u
    }

    /// `g_v = W g_u`.
    fn backward(&self, grad_u: &[f64]) -> Vec<f64> {
        (0..self.inputs)
            .map(|h| {
                let row = &self.weights[h * self.outputs..(h + 1) * self.outputs];
                row.iter().zip(grad_u).map(|(w, g)| w * g).sum()
            })
            .collect()
    }
}

/// Scalar function of the network whose input gradient is requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// Output pre-activation `u_{K,j}` (1-based `j`).
    Logit { index: usize },
    /// Sum of pre-activations of the given nodes of one layer.
    FeatureSum { layer: usize, nodes: Vec<usize> },
    /// Signed combination `sum_i c_i * u_{layer,i}`.
    Weighted {
        layer: usize,
        terms: Vec<(usize, f64)>,
    },
}

#[derive(Debug, Clone)]
pub struct Network {
    sizes: Vec<usize>,
    layers: Vec<DenseLayer>,
    input_domain: Option<Vec<Interval>>,
    fingerprint: Fingerprint,
}

impl Network {
    /// Builds a network, checking shapes and finiteness.
    pub fn new(
        sizes: Vec<usize>,
        layers: Vec<DenseLayer>,
        input_domain: Option<Vec<Interval>>,
    ) -> Result<Self, NetworkError> {
        if sizes.len() < 3 {
            return Err(NetworkError::Malformed(format!(
                "a network needs at least 3 layers, got {}",
                sizes.len()
            )));
        }
        if let Some(pos) = sizes.iter().position(|&s| s == 0) {
            return Err(NetworkError::ShapeMismatch {
                layer: pos + 1,
                detail: "layer size must be positive".into(),
            });
        }
        if layers.len() != sizes.len() - 1 {
            return Err(NetworkError::Malformed(format!(
                "{} layer sizes need {} weight layers, got {}",
                sizes.len(),
                sizes.len() - 1,
                layers.len()
            )));
        }
        for (i, layer) in layers.iter().enumerate() {
            let k = i + 1;
            let (rows, cols) = (sizes[i], sizes[i + 1]);
            if layer.inputs != rows || layer.outputs != cols || layer.weights.len() != rows * cols {
                return Err(NetworkError::ShapeMismatch {
                    layer: k,
                    detail: format!(
                        "weights must be {rows}x{cols}, got {}x{} ({} entries)",
                        layer.inputs,
                        layer.outputs,
                        layer.weights.len()
                    ),
                });
            }
            if layer.biases.len() != cols {
                return Err(NetworkError::ShapeMismatch {
                    layer: k + 1,
                    detail: format!("biases must have length {cols}, got {}", layer.biases.len()),
                });
            }
            if layer.weights.iter().any(|w| !w.is_finite()) {
                return Err(NetworkError::NonFinite {
                    layer: k,
                    what: "weight",
                });
            }
            if layer.biases.iter().any(|b| !b.is_finite()) {
                return Err(NetworkError::NonFinite {
                    layer: k + 1,
                    what: "bias",
                });
            }
        }
        if let Some(domain) = &input_domain {
            if domain.len() != sizes[0] {
                return Err(NetworkError::ShapeMismatch {
                    layer: 1,
                    detail: format!(
                        "input domain has {} intervals for {} inputs",
                        domain.len(),
                        sizes[0]
                    ),
                });
            }
            for iv in domain {
                if !iv.lo.is_finite() || !iv.hi.is_finite() {
                    return Err(NetworkError::NonFinite {
                        layer: 1,
                        what: "input bound",
                    });
                }
                if iv.lo > iv.hi {
                    return Err(NetworkError::Malformed(format!(
                        "empty input interval [{}, {}]",
                        iv.lo, iv.hi
                    )));
                }
            }
        }
        let fingerprint = compute_fingerprint(&sizes, &layers, input_domain.as_deref());
        Ok(Network {
            sizes,
            layers,
            input_domain,
            fingerprint,
        })
    }

    /// Random network with weights and biases drawn uniformly from `[-scale, scale]`.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], scale: f64, rng: &mut R) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let weights = (0..w[0] * w[1])
                    .map(|_| rng.random_range(-scale..=scale))
                    .collect();
                let biases = (0..w[1])
                    .map(|_| rng.random_range(-scale..=scale))
                    .collect();
                DenseLayer::new(w[0], w[1], weights, biases)
            })
            .collect();
        Network::new(sizes.to_vec(), layers, None).expect("random network shapes are consistent")
    }

    pub fn with_input_domain(
        mut self,
        domain: Option<Vec<Interval>>,
    ) -> Result<Self, NetworkError> {
        let sizes = std::mem::take(&mut self.sizes);
        let layers = std::mem::take(&mut self.layers);
        Network::new(sizes, layers, domain)
    }

    /// Number of layers `K`.
    pub fn depth(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Size `s_k` of layer `k` (1-based).
    pub fn layer_size(&self, k: usize) -> usize {
        self.sizes[k - 1]
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// Weights feeding layer `k + 1` from layer `k`, `1 <= k < K`.
    pub fn layer(&self, k: usize) -> &DenseLayer {
        &self.layers[k - 1]
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// `w_{k,h,l}` with 1-based indices.
    pub fn weight(&self, k: usize, h: usize, l: usize) -> f64 {
        self.layers[k - 1].weight(h - 1, l - 1)
    }

    /// `b_{k,l}` for `2 <= k <= K`, 1-based.
    pub fn bias(&self, k: usize, l: usize) -> f64 {
        self.layers[k - 2].biases[l - 1]
    }

    pub fn input_domain(&self) -> Option<&[Interval]> {
        self.input_domain.as_deref()
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    /// Hidden layer numbers `2..K`.
    pub fn hidden_layers(&self) -> std::ops::Range<usize> {
        2..self.depth()
    }

    pub fn hidden_count(&self) -> usize {
        self.sizes[1..self.sizes.len() - 1].iter().sum()
    }

    /// All hidden nodes in layer-major order.
    pub fn hidden_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.hidden_layers()
            .flat_map(move |k| (1..=self.layer_size(k)).map(move |i| NodeId::new(k, i)))
    }

    pub fn is_hidden(&self, node: NodeId) -> bool {
        node.layer >= 2
            && node.layer < self.depth()
            && node.index >= 1
            && node.index <= self.layer_size(node.layer)
    }

    /// Position of a hidden node in the flattened hidden order.
    pub fn hidden_offset(&self, node: NodeId) -> usize {
        let before: usize = self.sizes[1..node.layer - 1].iter().sum();
        before + node.index - 1
    }

    /// Clamps `x` into the input domain, if one is declared.
    pub fn clamp_to_domain(&self, x: &mut [f64]) {
        if let Some(domain) = &self.input_domain {
            for (xi, iv) in x.iter_mut().zip(domain) {
                *xi = iv.clamp(*xi);
            }
        }
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        match &self.input_domain {
            Some(domain) => x.iter().zip(domain).all(|(xi, iv)| iv.contains(*xi)),
            None => true,
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<(), NetworkError> {
        if x.len() != self.input_dim() {
            return Err(NetworkError::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(NetworkError::NonFiniteInput(pos));
        }
        Ok(())
    }

    /// Instantiates the network on `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<ActivationTrace, NetworkError> {
        self.check_input(x)?;
        let k_max = self.depth();
        let mut pre = Vec::with_capacity(k_max - 2);
        let mut post = Vec::with_capacity(k_max - 2);
        let mut v = x.to_vec();
        for layer in &self.layers[..k_max - 2] {
            let u = layer.forward(&v);
            v = u
                .iter()
                .map(|&ui| if ui >= 0.0 { ui } else { 0.0 })
                .collect();
            pre.push(u);
            post.push(v.clone());
        }
        let output = self.layers[k_max - 2].forward(&v);
        Ok(ActivationTrace::new(
            x.to_vec(),
            pre,
            post,
            output,
            self.fingerprint,
        ))
    }

    /// Label assigned to `x`: 1-based argmax of the output, lowest index on ties.
    pub fn label(&self, x: &[f64]) -> Result<usize, NetworkError> {
        Ok(self.evaluate(x)?.label())
    }

    /// Reverse-mode gradient of `objective` with respect to the input.
    ///
    /// The ReLU derivative is taken as 0 at `u = 0`.
    pub fn gradient(&self, x: &[f64], objective: &Objective) -> Result<Vec<f64>, NetworkError> {
        let trace = self.evaluate(x)?;
        self.gradient_at(&trace, objective)
    }

    /// Same as [`Network::gradient`] but reuses an existing trace.
    pub fn gradient_at(
        &self,
        trace: &ActivationTrace,
        objective: &Objective,
    ) -> Result<Vec<f64>, NetworkError> {
        if trace.fingerprint() != self.fingerprint {
            return Err(NetworkError::ForeignTrace);
        }
        let k_max = self.depth();
        let (layer, seed) = match objective {
            Objective::Logit { index } => {
                if *index == 0 || *index > self.output_dim() {
                    return Err(NetworkError::InvalidObjective(format!(
                        "logit {index} outside 1..={}",
                        self.output_dim()
                    )));
                }
                let mut g = vec![0.0; self.output_dim()];
                g[index - 1] = 1.0;
                (k_max, g)
            }
            Objective::FeatureSum { layer, nodes } => {
                let terms: Vec<(usize, f64)> = nodes.iter().map(|&n| (n, 1.0)).collect();
                (*layer, self.objective_seed(*layer, &terms)?)
            }
            Objective::Weighted { layer, terms } => (*layer, self.objective_seed(*layer, terms)?),
        };
        let mut grad_u = seed;
        let mut k = layer;
        loop {
            let grad_v = self.layers[k - 2].backward(&grad_u);
            if k - 1 == 1 {
                return Ok(grad_v);
            }
            let u = trace.pre_layer(k - 1);
            grad_u = grad_v
                .iter()
                .zip(u)
                .map(|(g, &ui)| if ui > 0.0 { *g } else { 0.0 })
                .collect();
            k -= 1;
        }
    }

    fn objective_seed(
        &self,
        layer: usize,
        terms: &[(usize, f64)],
    ) -> Result<Vec<f64>, NetworkError> {
        if layer < 2 || layer > self.depth() {
            return Err(NetworkError::InvalidObjective(format!(
                "layer {layer} has no pre-activation values"
            )));
        }
        if terms.is_empty() {
            return Err(NetworkError::InvalidObjective("empty node set".into()));
        }
        let size = self.layer_size(layer);
        let mut g = vec![0.0; size];
        for &(n, c) in terms {
            if n == 0 || n > size {
                return Err(NetworkError::InvalidObjective(format!(
                    "node {n} outside 1..={size} in layer {layer}"
                )));
            }
            g[n - 1] += c;
        }
        Ok(g)
    }
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.sizes == other.sizes
            && self.layers == other.layers
            && self.input_domain == other.input_domain
    }
}

fn compute_fingerprint(
    sizes: &[usize],
    layers: &[DenseLayer],
    domain: Option<&[Interval]>,
) -> Fingerprint {
    let mut h = Sha256::new();
    for s in sizes {
        h.update((*s as u64).to_le_bytes());
    }
    for layer in layers {
        for w in layer.weights.iter().chain(&layer.biases) {
            h.update(w.to_bits().to_le_bytes());
        }
    }
    if let Some(domain) = domain {
        for iv in domain {
            h.update(iv.lo.to_bits().to_le_bytes());
            h.update(iv.hi.to_bits().to_le_bytes());
        }
    }
    let digest = h.finalize();
    let mut out = [0u8; 16];
    out.copy_from_slice(&digest[..16]);
    Fingerprint(out)
}

/// Small networks with hand-checked values, shared by tests and tools.
pub mod fixtures {
    use super::*;

    /// The four-layer network with `W1`, `W2` from the worked example, zero
    /// biases and an output layer that copies the first two nodes of layer 3.
    pub fn small_net() -> Network {
        let w1 = vec![4.0, 0.0, -1.0, 1.0, -2.0, 1.0];
        let w2 = vec![2.0, 3.0, -1.0, -7.0, 6.0, 4.0, 1.0, -5.0, 9.0];
        let w3 = vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        Network::new(
            vec![2, 3, 3, 2],
            vec![
                DenseLayer::new(2, 3, w1, vec![0.0; 3]),
                DenseLayer::new(3, 3, w2, vec![0.0; 3]),
                DenseLayer::new(3, 2, w3, vec![0.0; 2]),
            ],
            None,
        )
        .unwrap()
    }
}
