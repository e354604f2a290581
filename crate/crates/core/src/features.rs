//! Features (node sets inside one layer) and condition/decision pairs.

use std::collections::HashSet;
use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{Network, NodeId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("feature in layer {layer} is empty")]
    Empty { layer: usize },
    #[error("feature in layer {layer} lists node {index} twice")]
    Duplicate { layer: usize, index: usize },
    #[error("node {index} is outside layer {layer} (size {size})")]
    OutOfRange {
        layer: usize,
        index: usize,
        size: usize,
    },
    #[error("layer {layer} cannot hold a {role} feature")]
    BadLayer { layer: usize, role: &'static str },
    #[error("condition and decision layers are not adjacent")]
    NotAdjacent,
    #[error("requested {requested} distinct pairs but only {available} exist")]
    TooMany { requested: usize, available: usize },
    #[error("{0}")]
    Invalid(String),
}

/// A non-empty set of nodes in one layer, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Feature {
    layer: usize,
    nodes: Vec<usize>,
}

impl Feature {
    /// Builds a feature from 1-based node indices. The order of `nodes` does
    /// not matter; duplicates are rejected.
    pub fn new(layer: usize, mut nodes: Vec<usize>) -> Result<Self, FeatureError> {
        if nodes.is_empty() {
            return Err(FeatureError::Empty { layer });
        }
        nodes.sort_unstable();
        if let Some(w) = nodes.windows(2).find(|w| w[0] == w[1]) {
            return Err(FeatureError::Duplicate { layer, index: w[0] });
        }
        if nodes[0] == 0 {
            return Err(FeatureError::Invalid("node indices are 1-based".into()));
        }
        Ok(Feature { layer, nodes })
    }

    pub fn singleton(layer: usize, index: usize) -> Self {
        Feature::new(layer, vec![index]).expect("singleton feature")
    }

    /// `P_k`: every node of layer `k`.
    pub fn whole_layer(net: &Network, layer: usize) -> Self {
        Feature {
            layer,
            nodes: (1..=net.layer_size(layer)).collect(),
        }
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn indices(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn contains(&self, index: usize) -> bool {
        self.nodes.binary_search(&index).is_ok()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(move |&i| NodeId::new(self.layer, i))
    }

    fn check_range(&self, net: &Network) -> Result<(), FeatureError> {
        let size = net.layer_size(self.layer);
        match self.nodes.last() {
            Some(&i) if i > size => Err(FeatureError::OutOfRange {
                layer: self.layer,
                index: i,
                size,
            }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, n) in self.nodes.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "n({},{})", self.layer, n)?;
        }
        write!(f, "}}")
    }
}

/// A condition feature at layer `k` and a decision feature at layer `k + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeaturePair {
    pub condition: Feature,
    pub decision: Feature,
}

impl FeaturePair {
    pub fn new(condition: Feature, decision: Feature) -> Result<Self, FeatureError> {
        if decision.layer != condition.layer + 1 {
            return Err(FeatureError::NotAdjacent);
        }
        Ok(FeaturePair {
            condition,
            decision,
        })
    }

    pub fn singletons(k: usize, i: usize, j: usize) -> Self {
        FeaturePair {
            condition: Feature::singleton(k, i),
            decision: Feature::singleton(k + 1, j),
        }
    }

    /// Condition layer `k`.
    pub fn k(&self) -> usize {
        self.condition.layer
    }

    /// Checks the pair against a network. Conditions must be hidden; the
    /// decision may sit in the output layer only when `allow_output` is set.
    pub fn validate(&self, net: &Network, allow_output: bool) -> Result<(), FeatureError> {
        let k = self.k();
        if k < 2 || k >= net.depth() {
            return Err(FeatureError::BadLayer {
                layer: k,
                role: "condition",
            });
        }
        let last_decision = if allow_output {
            net.depth()
        } else {
            net.depth() - 1
        };
        if self.decision.layer > last_decision {
            return Err(FeatureError::BadLayer {
                layer: self.decision.layer,
                role: "decision",
            });
        }
        self.condition.check_range(net)?;
        self.decision.check_range(net)
    }
}

impl fmt::Display for FeaturePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.condition, self.decision)
    }
}

/// Ordered, duplicate-free list of feature pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeaturePairSet {
    pairs: Vec<FeaturePair>,
}

impl FeaturePairSet {
    /// Builds a set, dropping repeated pairs while keeping first occurrences.
    pub fn new(pairs: Vec<FeaturePair>) -> Self {
        let mut seen = HashSet::new();
        let pairs = pairs
            .into_iter()
            .filter(|p| seen.insert(p.clone()))
            .collect();
        FeaturePairSet { pairs }
    }

    pub fn pairs(&self) -> &[FeaturePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FeaturePair> {
        self.pairs.iter()
    }

    pub fn validate(&self, net: &Network, allow_output: bool) -> Result<(), FeatureError> {
        self.pairs
            .iter()
            .try_for_each(|p| p.validate(net, allow_output))
    }

    pub fn to_json(&self) -> String {
        let docs: Vec<PairDoc> = self
            .pairs
            .iter()
            .map(|p| PairDoc {
                k: p.k(),
                condition: p.condition.nodes.clone(),
                decision: p.decision.nodes.clone(),
            })
            .collect();
        serde_json::to_string_pretty(&docs).expect("pair documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, FeatureError> {
        let docs: Vec<PairDoc> =
            serde_json::from_str(text).map_err(|e| FeatureError::Invalid(e.to_string()))?;
        let pairs = docs
            .into_iter()
            .map(|d| {
                FeaturePair::new(
                    Feature::new(d.k, d.condition)?,
                    Feature::new(d.k + 1, d.decision)?,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FeaturePairSet::new(pairs))
    }
}

impl<'a> IntoIterator for &'a FeaturePairSet {
    type Item = &'a FeaturePair;
    type IntoIter = std::slice::Iter<'a, FeaturePair>;
    fn into_iter(self) -> Self::IntoIter {
        self.pairs.iter()
    }
}

#[derive(Serialize, Deserialize)]
struct PairDoc {
    k: usize,
    condition: Vec<usize>,
    decision: Vec<usize>,
}

/// Last layer that may hold a decision feature.
fn last_decision_layer(net: &Network, output_decisions: bool) -> usize {
    if output_decisions {
        net.depth()
    } else {
        net.depth() - 1
    }
}

/// Every neuron pair `({n_{k,i}}, {n_{k+1,j}})` with a hidden condition.
///
/// Pairs are ordered by `k`, then decision `j`, then condition `i`.
pub fn enumerate_singleton_pairs(net: &Network, output_decisions: bool) -> FeaturePairSet {
    let mut pairs = Vec::new();
    for k in 2..last_decision_layer(net, output_decisions) {
        for j in 1..=net.layer_size(k + 1) {
            for i in 1..=net.layer_size(k) {
                pairs.push(FeaturePair::singletons(k, i, j));
            }
        }
    }
    FeaturePairSet { pairs }
}

/// For each decision node, the `kappa` conditions with the largest `|w|` on
/// the incoming edge; ties go to the lower node index.
pub fn enumerate_top_weight_pairs(
    net: &Network,
    kappa: usize,
    output_decisions: bool,
) -> FeaturePairSet {
    let mut pairs = Vec::new();
    for k in 2..last_decision_layer(net, output_decisions) {
        for j in 1..=net.layer_size(k + 1) {
            let mut order: Vec<usize> = (1..=net.layer_size(k)).collect();
            order.sort_by(|&a, &b| {
                let (wa, wb) = (net.weight(k, a, j).abs(), net.weight(k, b, j).abs());
                wb.total_cmp(&wa).then(a.cmp(&b))
            });
            for &i in order.iter().take(kappa) {
                pairs.push(FeaturePair::singletons(k, i, j));
            }
        }
    }
    FeaturePairSet { pairs }
}

/// `count` distinct pairs with singleton decisions and condition features of
/// `max(1, floor(omega * s_k))` nodes drawn without replacement.
pub fn enumerate_random_feature_pairs(
    net: &Network,
    omega: f64,
    count: usize,
    seed: u64,
    output_decisions: bool,
) -> Result<FeaturePairSet, FeatureError> {
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(FeatureError::Invalid(format!(
            "omega must lie in (0, 1], got {omega}"
        )));
    }
    if count == 0 {
        return Err(FeatureError::Invalid("count must be at least 1".into()));
    }
    let layers: Vec<usize> = (2..last_decision_layer(net, output_decisions)).collect();
    if layers.is_empty() {
        return Err(FeatureError::TooMany {
            requested: count,
            available: 0,
        });
    }
    let cond_size = |k: usize| ((omega * net.layer_size(k) as f64).floor() as usize).max(1);
    let available: u128 = layers
        .iter()
        .map(|&k| binomial(net.layer_size(k), cond_size(k)) * net.layer_size(k + 1) as u128)
        .sum();
    if (count as u128) > available {
        return Err(FeatureError::TooMany {
            requested: count,
            available: available as usize,
        });
    }
    // Decision nodes are drawn uniformly over all eligible nodes.
    let decisions: Vec<NodeId> = layers
        .iter()
        .flat_map(|&k| (1..=net.layer_size(k + 1)).map(move |j| NodeId::new(k + 1, j)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let d = decisions[rng.random_range(0..decisions.len())];
        let k = d.layer - 1;
        let idx: Vec<usize> = sample(&mut rng, net.layer_size(k), cond_size(k))
            .into_iter()
            .map(|i| i + 1)
            .collect();
        let pair = FeaturePair {
            condition: Feature::new(k, idx).expect("sampled indices are distinct"),
            decision: Feature::singleton(d.layer, d.index),
        };
        if seen.insert(pair.clone()) {
            pairs.push(pair);
        }
    }
    Ok(FeaturePairSet { pairs })
}

fn binomial(n: usize, r: usize) -> u128 {
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::small_net;
    use proptest::prelude::*;

    #[test]
    fn small_net_singletons() {
        let net = small_net();
        assert_eq!(enumerate_singleton_pairs(&net, false).len(), 9);
        assert_eq!(enumerate_singleton_pairs(&net, true).len(), 15);
    }

    #[test]
    fn single_hidden_layer_has_no_pairs() {
        use rand::SeedableRng;
        let net = Network::random(&[2, 4, 2], 1.0, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(enumerate_singleton_pairs(&net, false).is_empty());
    }

    #[test]
    fn top_weight_examples() {
        let net = small_net();
        let top1 = enumerate_top_weight_pairs(&net, 1, false);
        let for_31: Vec<_> = top1
            .iter()
            .filter(|p| p.decision == Feature::singleton(3, 1))
            .collect();
        assert_eq!(for_31.len(), 1);
        assert_eq!(for_31[0].condition, Feature::singleton(2, 2));

        let top2 = enumerate_top_weight_pairs(&net, 2, false);
        let for_33: Vec<_> = top2
            .iter()
            .filter(|p| p.decision == Feature::singleton(3, 3))
            .map(|p| p.condition.clone())
            .collect();
        assert_eq!(
            for_33,
            vec![Feature::singleton(2, 3), Feature::singleton(2, 2)]
        );
    }

    #[test]
    fn top_weight_saturates() {
        let net = small_net();
        let mut a: Vec<_> = enumerate_top_weight_pairs(&net, 10, false).pairs;
        let mut b: Vec<_> = enumerate_singleton_pairs(&net, false).pairs;
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn random_pairs_sizes_and_determinism() {
        let net = small_net();
        let a = enumerate_random_feature_pairs(&net, 0.5, 4, 7, false).unwrap();
        assert_eq!(a.len(), 4);
        assert!(a
            .iter()
            .all(|p| p.condition.len() == 1 && p.decision.is_singleton()));
        let b = enumerate_random_feature_pairs(&net, 0.5, 4, 7, false).unwrap();
        assert_eq!(a, b);

        let whole = enumerate_random_feature_pairs(&net, 1.0, 3, 1, false).unwrap();
        assert!(whole
            .iter()
            .all(|p| p.condition == Feature::whole_layer(&net, 2)));
        assert!(matches!(
            enumerate_random_feature_pairs(&net, 1.0, 4, 1, false),
            Err(FeatureError::TooMany {
                requested: 4,
                available: 3
            })
        ));
    }

    #[test]
    fn feature_validation() {
        assert!(matches!(
            Feature::new(2, vec![]),
            Err(FeatureError::Empty { .. })
        ));
        assert!(matches!(
            Feature::new(2, vec![1, 1]),
            Err(FeatureError::Duplicate { .. })
        ));
        let net = small_net();
        let bad = FeaturePair::singletons(2, 4, 1);
        assert!(matches!(
            bad.validate(&net, false),
            Err(FeatureError::OutOfRange { .. })
        ));
        let out = FeaturePair::singletons(3, 1, 1);
        assert!(out.validate(&net, false).is_err());
        assert!(out.validate(&net, true).is_ok());
        assert!(FeaturePair::singletons(1, 1, 1)
            .validate(&net, true)
            .is_err());
    }

    #[test]
    fn json_export_import() {
        let net = small_net();
        let set = enumerate_top_weight_pairs(&net, 2, false);
        let text = set.to_json();
        assert_eq!(FeaturePairSet::from_json(&text).unwrap(), set);
        let doc = r#"[{"k":2,"condition":[1],"decision":[1]}]"#;
        let one = FeaturePairSet::from_json(doc).unwrap();
        assert_eq!(one.pairs()[0], FeaturePair::singletons(2, 1, 1));
    }

    #[test]
    fn duplicates_are_dropped() {
        let p = FeaturePair::singletons(2, 1, 1);
        let set = FeaturePairSet::new(vec![p.clone(), FeaturePair::singletons(2, 2, 1), p]);
        assert_eq!(set.len(), 2);
    }

    fn arch() -> impl Strategy<Value = Vec<usize>> {
        (prop::collection::vec(1usize..7, 1..5), 1usize..4, 1usize..4).prop_map(|(hidden, i, o)| {
            let mut s = vec![i];
            s.extend(hidden);
            s.push(o);
            s
        })
    }

    proptest! {
        #[test]
        fn singleton_count_closed_form(sizes in arch(), seed in any::<u64>(), out in any::<bool>()) {
            use rand::SeedableRng;
            let net = Network::random(&sizes, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
            let k_max = sizes.len();
            let upto = if out { k_max } else { k_max - 1 };
            let expected: usize = (2..upto).map(|k| sizes[k - 1] * sizes[k]).sum();
            let set = enumerate_singleton_pairs(&net, out);
            prop_assert_eq!(set.len(), expected);
            prop_assert!(set.validate(&net, out).is_ok());
        }

        #[test]
        fn top_weight_is_subset(sizes in arch(), seed in any::<u64>(), kappa in 1usize..5) {
            use rand::SeedableRng;
            let net = Network::random(&sizes, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
            let all: HashSet<_> = enumerate_singleton_pairs(&net, false).pairs.into_iter().collect();
            let top = enumerate_top_weight_pairs(&net, kappa, false);
            for p in &top {
                prop_assert!(all.contains(p));
            }
            let per_decision: usize = (2..sizes.len() - 1).map(|k| sizes[k] * kappa.min(sizes[k - 1])).sum();
            prop_assert_eq!(top.len(), per_decision);
        }

        #[test]
        fn random_pairs_respect_bounds(seed in any::<u64>(), omega in 0.05f64..=1.0) {
            use rand::SeedableRng;
            let net = Network::random(&[3, 6, 5, 4, 2], 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
            let set = enumerate_random_feature_pairs(&net, omega, 10, seed, false).unwrap();
            prop_assert_eq!(set.len(), 10);
            prop_assert!(set.validate(&net, false).is_ok());
            for p in &set {
                let expect = ((omega * net.layer_size(p.k()) as f64).floor() as usize).max(1);
                prop_assert_eq!(p.condition.len(), expect);
            }
        }
    }
}
