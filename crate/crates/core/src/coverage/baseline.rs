//! Per-node criteria: neuron, neuron boundary, top-m and multisection coverage.

use super::report::{breakdown, CoverageItem, CoverageReport, Target, Witness};
use super::value::section_of;
use super::{CoverageError, TestSuite};
use crate::network::{Fingerprint, Network, NodeId};

/// Per hidden node, the smallest and largest `v` over a reference set.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronBounds {
    fingerprint: Fingerprint,
    /// `layers[k - 2][i - 1] = (v_lo, v_hi)`.
    layers: Vec<Vec<(f64, f64)>>,
}

impl NeuronBounds {
    /// `(v_lo, v_hi)` for a hidden node.
    pub fn get(&self, n: NodeId) -> (f64, f64) {
        self.layers[n.layer - 2][n.index - 1]
    }

    pub fn covers(&self, n: NodeId) -> bool {
        n.layer >= 2
            && n.layer - 2 < self.layers.len()
            && n.index >= 1
            && n.index <= self.layers[n.layer - 2].len()
    }

    /// True when `v_lo < v_hi`.
    pub fn is_nontrivial(&self, n: NodeId) -> bool {
        let (lo, hi) = self.get(n);
        hi > lo
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    pub(crate) fn check_fingerprint(&self, fp: Fingerprint) -> Result<(), CoverageError> {
        if self.fingerprint != fp {
            return Err(CoverageError::StaleBounds);
        }
        Ok(())
    }
}

/// Exact per-node min and max of `v` over `reference`.
pub fn compute_bounds(net: &Network, reference: &TestSuite) -> Result<NeuronBounds, CoverageError> {
    if reference.is_empty() {
        return Err(CoverageError::EmptyReference);
    }
    let traces = reference.traces(net)?;
    let mut layers: Vec<Vec<(f64, f64)>> = traces[0]
        .hidden_post()
        .iter()
        .map(|layer| layer.iter().map(|&v| (v, v)).collect())
        .collect();
    for t in &traces[1..] {
        for (bounds, values) in layers.iter_mut().zip(t.hidden_post()) {
            for (b, &v) in bounds.iter_mut().zip(values) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
    }
    Ok(NeuronBounds {
        fingerprint: net.fingerprint(),
        layers,
    })
}

/// Covers each hidden node with the first input satisfying `hit`.
fn per_node(
    net: &Network,
    suite: &TestSuite,
    criterion: &str,
    description: String,
    hit: impl Fn(NodeId, &crate::network::ActivationTrace) -> bool,
) -> Result<CoverageReport, CoverageError> {
    let traces = suite.traces(net)?;
    let items = net
        .hidden_nodes()
        .map(|n| {
            let mut item = CoverageItem::new(Target::node(n));
            if let Some(i) = traces.iter().position(|t| hit(n, t)) {
                item.covered = true;
                item.witness = Some(Witness {
                    first: i,
                    second: None,
                });
            }
            item
        })
        .collect();
    Ok(CoverageReport::from_items(criterion, description, items))
}

/// A node is covered when some input activates it (`u >= 0`).
pub fn neuron_coverage(net: &Network, suite: &TestSuite) -> Result<CoverageReport, CoverageError> {
    per_node(net, suite, "NC", "NC".into(), |n, t| t.u(n) >= 0.0)
}

/// A node is covered when some input drives `v` strictly above its recorded maximum.
pub fn neuron_boundary_coverage(
    net: &Network,
    suite: &TestSuite,
    bounds: &NeuronBounds,
) -> Result<CoverageReport, CoverageError> {
    bounds.check_fingerprint(net.fingerprint())?;
    per_node(net, suite, "NBC", "NBC".into(), |n, t| {
        t.v(n) > bounds.get(n).1
    })
}

/// A node is covered when some input ranks it among the `m` largest of its layer.
pub fn top_m_coverage(
    net: &Network,
    suite: &TestSuite,
    m: usize,
) -> Result<CoverageReport, CoverageError> {
    let min_size = net
        .hidden_layers()
        .map(|k| net.layer_size(k))
        .min()
        .unwrap_or(0);
    if m == 0 || m > min_size {
        return Err(CoverageError::BadParameter(format!(
            "top-m needs 1 <= m <= {min_size} (smallest hidden layer), got {m}"
        )));
    }
    per_node(net, suite, "TKNC", format!("TKNC[m={m}]"), |n, t| {
        t.rank(n) <= m
    })
}

/// A node is covered when every one of the `m` equal sections of
/// `[v_lo, v_hi]` is hit by some input. Nodes with `v_lo = v_hi` are left
/// out of the denominator and flagged as excluded. With `fraction_of_sections`
/// the metric counts sections instead of nodes.
pub fn multisection_coverage(
    net: &Network,
    suite: &TestSuite,
    bounds: &NeuronBounds,
    m: usize,
    fraction_of_sections: bool,
) -> Result<CoverageReport, CoverageError> {
    bounds.check_fingerprint(net.fingerprint())?;
    if m == 0 {
        return Err(CoverageError::BadParameter(
            "multisection needs m >= 1".into(),
        ));
    }
    let traces = suite.traces(net)?;
    let mut items = Vec::with_capacity(net.hidden_count());
    for n in net.hidden_nodes() {
        let mut item = CoverageItem::new(Target::node(n));
        let (lo, hi) = bounds.get(n);
        if !(hi > lo) {
            item.excluded = true;
            items.push(item);
            continue;
        }
        let mut hit = vec![false; m];
        let mut last_new = None;
        for (i, t) in traces.iter().enumerate() {
            if let Some(s) = section_of(t.v(n), lo, hi, m) {
                if !hit[s - 1] {
                    hit[s - 1] = true;
                    last_new = Some(i);
                }
            }
        }
        let count = hit.iter().filter(|h| **h).count();
        item.sections_hit = Some(count);
        if count == m {
            item.covered = true;
            // The input that completed the set of sections.
            item.witness = last_new.map(|first| Witness {
                first,
                second: None,
            });
        }
        items.push(item);
    }
    if items.iter().all(|i| i.excluded) {
        return Err(CoverageError::AllDegenerate);
    }
    let description = if fraction_of_sections {
        format!("KMNC[m={m},sections]")
    } else {
        format!("KMNC[m={m}]")
    };
    if !fraction_of_sections {
        return Ok(CoverageReport::from_items("KMNC", description, items));
    }
    let count = |i: &CoverageItem| (i.sections_hit.unwrap_or(0), m);
    let per_layer = breakdown(&items, count);
    let (covered, total) = items
        .iter()
        .filter(|i| !i.excluded)
        .map(count)
        .fold((0, 0), |(a, b), (c, d)| (a + c, b + d));
    Ok(CoverageReport::assemble(
        "KMNC",
        description,
        covered,
        total,
        per_layer,
        items,
    ))
}
