use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::features::FeaturePair;
use crate::network::NodeId;

/// What a report line is about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Target {
    Pair {
        k: usize,
        condition: Vec<usize>,
        decision: Vec<usize>,
    },
    Node {
        layer: usize,
        index: usize,
    },
    Pattern {
        index: usize,
        signs: Vec<i8>,
    },
}

impl Target {
    pub fn pair(p: &FeaturePair) -> Self {
        Target::Pair {
            k: p.k(),
            condition: p.condition.indices().to_vec(),
            decision: p.decision.indices().to_vec(),
        }
    }

    pub fn node(n: NodeId) -> Self {
        Target::Node {
            layer: n.layer,
            index: n.index,
        }
    }

    /// Layer used for the per-layer breakdown: the decision layer for pairs.
    pub fn layer(&self) -> Option<usize> {
        match self {
            Target::Pair { k, .. } => Some(k + 1),
            Target::Node { layer, .. } => Some(*layer),
            Target::Pattern { .. } => None,
        }
    }
}

/// Suite indices (0-based) of the inputs that cover an item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub first: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub second: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageItem {
    pub target: Target,
    pub covered: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Witness>,
    /// L-infinity distance between the two witness inputs.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub adversarial: Option<bool>,
    /// Left out of the denominator (multisection with a degenerate interval).
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub excluded: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sections_hit: Option<usize>,
}

impl CoverageItem {
    pub(crate) fn new(target: Target) -> Self {
        CoverageItem {
            target,
            covered: false,
            witness: None,
            distance: None,
            adversarial: None,
            excluded: false,
            sections_hit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerBreakdown {
    pub layer: usize,
    pub covered: usize,
    pub total: usize,
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Short criterion id: `SS`, `VS`, `SV`, `VV`, `NC`, `NBC`, `TKNC`, `KMNC` or `S`.
    pub criterion: String,
    /// Human-readable criterion with its parameters.
    pub description: String,
    pub covered: usize,
    pub total: usize,
    pub metric: f64,
    pub per_layer: Vec<LayerBreakdown>,
    /// Fraction of witness pairs that are adversarial, once an oracle has been applied.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub adversarial_fraction: Option<f64>,
    pub items: Vec<CoverageItem>,
}

impl CoverageReport {
    /// Builds a report where every non-excluded item counts once.
    pub(crate) fn from_items(
        criterion: &str,
        description: String,
        items: Vec<CoverageItem>,
    ) -> Self {
        let counted = items.iter().filter(|i| !i.excluded);
        let covered = counted.clone().filter(|i| i.covered).count();
        let total = counted.count();
        let per_layer = breakdown(&items, |i| (usize::from(i.covered), 1));
        CoverageReport::assemble(criterion, description, covered, total, per_layer, items)
    }

    pub(crate) fn assemble(
        criterion: &str,
        description: String,
        covered: usize,
        total: usize,
        per_layer: Vec<LayerBreakdown>,
        items: Vec<CoverageItem>,
    ) -> Self {
        CoverageReport {
            criterion: criterion.to_string(),
            description,
            covered,
            total,
            metric: ratio(covered, total),
            per_layer,
            adversarial_fraction: None,
            items,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.covered == self.total
    }

    /// Indices of items that are counted but not covered.
    pub fn uncovered(&self) -> impl Iterator<Item = usize> + '_ {
        self.items
            .iter()
            .enumerate()
            .filter(|(_, i)| !i.excluded && !i.covered)
            .map(|(n, _)| n)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// One CSV row per item.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "layer",
            "condition",
            "decision",
            "covered",
            "witness",
            "distance",
            "adversarial",
            "excluded",
        ])?;
        let join = |v: &[usize]| {
            v.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        for item in &self.items {
            let (layer, cond, dec) = match &item.target {
                Target::Pair {
                    k,
                    condition,
                    decision,
                } => (k.to_string(), join(condition), join(decision)),
                Target::Node { layer, index } => {
                    (layer.to_string(), index.to_string(), String::new())
                }
                Target::Pattern { index, signs } => (
                    String::new(),
                    index.to_string(),
                    signs
                        .iter()
                        .map(|s| if *s > 0 { '+' } else { '-' })
                        .collect(),
                ),
            };
            let witness = match item.witness {
                Some(Witness {
                    first,
                    second: Some(s),
                }) => format!("{first};{s}"),
                Some(Witness {
                    first,
                    second: None,
                }) => first.to_string(),
                None => String::new(),
            };
            let opt = |v: Option<String>| v.unwrap_or_default();
            w.write_record([
                layer,
                cond,
                dec,
                item.covered.to_string(),
                witness,
                opt(item.distance.map(|d| d.to_string())),
                opt(item.adversarial.map(|a| a.to_string())),
                item.excluded.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn ratio(covered: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        covered as f64 / total as f64
    }
}

/// Groups items by layer; `count` returns (covered, total) contributions.
pub(crate) fn breakdown(
    items: &[CoverageItem],
    count: impl Fn(&CoverageItem) -> (usize, usize),
) -> Vec<LayerBreakdown> {
    let mut layers: Vec<LayerBreakdown> = Vec::new();
    for item in items.iter().filter(|i| !i.excluded) {
        let Some(layer) = item.target.layer() else {
            continue;
        };
        let (c, t) = count(item);
        match layers.iter_mut().find(|l| l.layer == layer) {
            Some(l) => {
                l.covered += c;
                l.total += t;
            }
            None => layers.push(LayerBreakdown {
                layer,
                covered: c,
                total: t,
                metric: 0.0,
            }),
        }
    }
    layers.sort_by_key(|l| l.layer);
    for l in &mut layers {
        l.metric = ratio(l.covered, l.total);
    }
    layers
}
