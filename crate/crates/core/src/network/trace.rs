use serde::Serialize;

use super::{Fingerprint, NetworkError, NodeId, Sign};

/// Values of every node of a network instantiated on one input.
///
/// `pre[i]` and `post[i]` hold layer `i + 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivationTrace {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    output: Vec<f64>,
    label: usize,
    #[serde(skip)]
    fingerprint: Fingerprint,
}

impl ActivationTrace {
    pub(crate) fn new(
        input: Vec<f64>,
        pre: Vec<Vec<f64>>,
        post: Vec<Vec<f64>>,
        output: Vec<f64>,
        fingerprint: Fingerprint,
    ) -> Self {
        let label = argmax(&output) + 1;
        ActivationTrace {
            input,
            pre,
            post,
            output,
            label,
            fingerprint,
        }
    }

    pub fn input(&self) -> &[f64] {
        &self.input
    }

    pub fn output(&self) -> &[f64] {
        &self.output
    }

    /// 1-based index of the largest output, lowest index on ties.
    pub fn label(&self) -> usize {
        self.label
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    /// Number of layers of the producing network.
    pub fn depth(&self) -> usize {
        self.pre.len() + 2
    }

    /// Pre-activation values `u_k` of layer `k`; layer `K` returns the output.
    pub fn pre_layer(&self, k: usize) -> &[f64] {
        if k == self.depth() {
            &self.output
        } else {
            &self.pre[k - 2]
        }
    }

    /// Post-activation values `v_k` of layer `k`; layer 1 returns the input and
    /// layer `K` the output.
    pub fn post_layer(&self, k: usize) -> &[f64] {
        if k == 1 {
            &self.input
        } else if k == self.depth() {
            &self.output
        } else {
            &self.post[k - 2]
        }
    }

    pub fn hidden_pre(&self) -> &[Vec<f64>] {
        &self.pre
    }

    pub fn hidden_post(&self) -> &[Vec<f64>] {
        &self.post
    }

    /// `u_{k,i}` of a hidden or output node. Panics on out-of-range nodes.
    #[inline]
    pub fn u(&self, node: NodeId) -> f64 {
        self.pre_layer(node.layer)[node.index - 1]
    }

    /// `v_{k,i}` of a node.
    #[inline]
    pub fn v(&self, node: NodeId) -> f64 {
        self.post_layer(node.layer)[node.index - 1]
    }

    fn is_hidden(&self, node: NodeId) -> bool {
        node.layer >= 2
            && node.layer < self.depth()
            && node.index >= 1
            && node.index <= self.pre[node.layer - 2].len()
    }

    /// Sign of a hidden node.
    pub fn sign(&self, node: NodeId) -> Result<Sign, NetworkError> {
        if !self.is_hidden(node) {
            return Err(NetworkError::NotHidden(node));
        }
        Ok(Sign::of(self.u(node)))
    }

    /// Sign without range checks; also defined for output nodes.
    #[inline]
    pub fn sign_unchecked(&self, node: NodeId) -> Sign {
        Sign::of(self.u(node))
    }

    /// All hidden signs in layer-major order.
    pub fn pattern(&self) -> Vec<Sign> {
        self.pre.iter().flatten().map(|&u| Sign::of(u)).collect()
    }

    /// Rank of `v_{k,i}` inside its layer: one plus the number of strictly
    /// larger values.
    pub fn rank(&self, node: NodeId) -> usize {
        let values = self.post_layer(node.layer);
        let v = values[node.index - 1];
        1 + values.iter().filter(|&&w| w > v).count()
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
