use std::io::Write;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::coverage::{CoverageReport, Norm, TestSuite};
use crate::network::Network;

/// Two inputs are close when `||x - x'||_p <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub p: Norm,
    pub b: f64,
}

impl OracleConfig {
    pub fn new(p: Norm, b: f64) -> Result<Self, AnalysisError> {
        let o = OracleConfig { p, b };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(AnalysisError::BadOracle(format!(
                "b must be finite and positive, got {}",
                self.b
            )));
        }
        Ok(())
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.p.distance(x, y)
    }

    pub fn close(&self, x: &[f64], y: &[f64]) -> bool {
        self.distance(x, y) <= self.b
    }
}

/// `x'` is adversarial for `x` when the two are close but labelled differently.
pub fn is_adversarial(
    net: &Network,
    x: &[f64],
    x_adv: &[f64],
    oracle: &OracleConfig,
) -> Result<bool, AnalysisError> {
    oracle.validate()?;
    if x.len() != x_adv.len() {
        return Err(AnalysisError::Dimension(x.len(), x_adv.len()));
    }
    if !oracle.close(x, x_adv) {
        return Ok(false);
    }
    Ok(net.label(x)? != net.label(x_adv)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerAdversarial {
    pub layer: usize,
    pub adversarial: usize,
    pub total: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialStats {
    pub witness_pairs: usize,
    pub adversarial_pairs: usize,
    /// `adversarial_pairs / witness_pairs`; absent without witnesses.
    pub ae: Option<f64>,
    /// Distances of the adversarial pairs in increasing order, each with the
    /// fraction of adversarial pairs at that distance or closer.
    pub curve: Vec<(f64, f64)>,
    pub per_layer: Vec<LayerAdversarial>,
}

impl AdversarialStats {
    /// The distance curve as `distance,cumulative_fraction` rows.
    pub fn write_curve_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["distance", "cumulative_fraction"])?;
        for (d, f) in &self.curve {
            w.write_record([d.to_string(), f.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Applies the oracle to every two-input witness of `report`.
pub fn adversarial_stats(
    net: &Network,
    report: &CoverageReport,
    suite: &TestSuite,
    oracle: &OracleConfig,
) -> Result<AdversarialStats, AnalysisError> {
    oracle.validate()?;
    let inputs = suite.inputs();
    let labels: Vec<usize> = suite.traces(net)?.iter().map(|t| t.label()).collect();
    let mut distances = Vec::new();
    let mut per_layer: Vec<LayerAdversarial> = Vec::new();
    let mut witness_pairs = 0;
    for item in &report.items {
        let Some(w) = item.witness else { continue };
        let Some(second) = w.second else { continue };
        for index in [w.first, second] {
            if index >= inputs.len() {
                return Err(AnalysisError::WitnessOutOfRange {
                    index,
                    len: inputs.len(),
                });
            }
        }
        witness_pairs += 1;
        let d = oracle.distance(&inputs[w.first], &inputs[second]);
        let adversarial = d <= oracle.b && labels[w.first] != labels[second];
        if adversarial {
            distances.push(d);
        }
        if let Some(layer) = item.target.layer() {
            let entry = match per_layer.iter().position(|l| l.layer == layer) {
                Some(i) => &mut per_layer[i],
                None => {
                    per_layer.push(LayerAdversarial {
                        layer,
                        adversarial: 0,
                        total: 0,
                        fraction: 0.0,
                    });
                    per_layer.last_mut().unwrap()
                }
            };
            entry.total += 1;
            entry.adversarial += usize::from(adversarial);
        }
    }
    per_layer.sort_by_key(|l| l.layer);
    for l in &mut per_layer {
        l.fraction = l.adversarial as f64 / l.total as f64;
    }
    distances.sort_by(f64::total_cmp);
    let n = distances.len();
    let curve = distances
        .iter()
        .enumerate()
        .map(|(i, &d)| (d, (i + 1) as f64 / n as f64))
        .collect();
    Ok(AdversarialStats {
        witness_pairs,
        adversarial_pairs: n,
        ae: (witness_pairs > 0).then(|| n as f64 / witness_pairs as f64),
        curve,
        per_layer,
    })
}

/// Marks each witness pair of `report` as adversarial or not and fills in
/// the report's adversarial fraction.
pub fn apply_oracle(
    net: &Network,
    report: &mut CoverageReport,
    suite: &TestSuite,
    oracle: &OracleConfig,
) -> Result<AdversarialStats, AnalysisError> {
    let stats = adversarial_stats(net, report, suite, oracle)?;
    let labels: Vec<usize> = suite.traces(net)?.iter().map(|t| t.label()).collect();
    for item in &mut report.items {
        if let Some(w) = item.witness {
            if let Some(second) = w.second {
                let (a, b) = (&suite.inputs()[w.first], &suite.inputs()[second]);
                item.adversarial = Some(oracle.close(a, b) && labels[w.first] != labels[second]);
            }
        }
    }
    report.adversarial_fraction = stats.ae;
    Ok(stats)
}
