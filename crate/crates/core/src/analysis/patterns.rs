use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::coverage::{CoverageItem, CoverageReport, Target, TestSuite, Witness};
use crate::features::{FeaturePair, FeaturePairSet};
use crate::lp::{build_sign_model, ModelOptions, SolverOptions, Status};
use crate::network::{Fingerprint, Network, NodeId, Sign};

pub const DEFAULT_PATTERN_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternStatus {
    Feasible,
    Infeasible,
    /// The LP found a point but evaluating the network there did not
    /// reproduce the pattern, even after tightening.
    Unverified,
    /// The LP hit its iteration limit.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternEntry {
    /// One sign per hidden node, layer-major.
    pub signs: Vec<Sign>,
    pub status: PatternStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Vec<f64>>,
}

impl PatternEntry {
    /// Feasible or unverified: the LP believes the region is non-empty.
    pub fn is_feasible(&self) -> bool {
        matches!(
            self.status,
            PatternStatus::Feasible | PatternStatus::Unverified
        )
    }
}

/// Every hidden sign vector of a network with its LP feasibility, in
/// canonical order: entry `i` has node `h` negative iff bit `h` of `i` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSet {
    pub fingerprint: Fingerprint,
    pub hidden: usize,
    pub entries: Vec<PatternEntry>,
}

impl PatternSet {
    pub fn feasible(&self) -> impl Iterator<Item = (usize, &PatternEntry)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_feasible())
    }

    pub fn feasible_count(&self) -> usize {
        self.feasible().count()
    }

    /// Canonical index of a sign vector.
    pub fn index_of(signs: &[Sign]) -> usize {
        signs
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Sign::Negative)
            .map(|(h, _)| 1usize << h)
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pattern sets serialize")
    }
}

fn signs_of(index: usize, hidden: usize) -> Vec<Sign> {
    (0..hidden)
        .map(|h| {
            if index >> h & 1 == 1 {
                Sign::Negative
            } else {
                Sign::Positive
            }
        })
        .collect()
}

/// Decides, for each of the `2^H` hidden sign vectors, whether some input
/// in the domain produces it. Each decision is one LP over all hidden
/// layers without an objective; its point is kept as a witness once the
/// network reproduces the pattern there.
pub fn enumerate_patterns(net: &Network, limit: usize) -> Result<PatternSet, AnalysisError> {
    let hidden = net.hidden_count();
    if hidden > limit || hidden >= usize::BITS as usize {
        return Err(AnalysisError::TooManyHidden { hidden, limit });
    }
    let depth = net.depth() - 1;
    let solver = SolverOptions::default();
    let entries = (0..1usize << hidden)
        .into_par_iter()
        .map(|index| {
            let signs = signs_of(index, hidden);
            let mut status = PatternStatus::Infeasible;
            let mut witness = None;
            // A point on the boundary of the region may evaluate to the
            // neighbouring pattern, so a second, tighter solve is allowed.
            for margin in [0.0, 1e-6] {
                let options = ModelOptions {
                    delta: crate::lp::DEFAULT_DELTA + margin,
                    margin,
                    ..ModelOptions::default()
                };
                let model = build_sign_model(net, &signs, depth, &options)?;
                let s = model.solve(&solver);
                match s.status {
                    Status::Optimal => {
                        let mut x = s.x2;
                        net.clamp_to_domain(&mut x);
                        if net.evaluate(&x)?.pattern() == signs {
                            status = PatternStatus::Feasible;
                            witness = Some(x);
                            break;
                        }
                        status = PatternStatus::Unverified;
                    }
                    Status::IterationLimit | Status::Numerical => {
                        status = PatternStatus::Unknown;
                        break;
                    }
                    Status::Infeasible | Status::Unbounded => {
                        // A tighter model of an infeasible one stays infeasible.
                        if status != PatternStatus::Unverified {
                            status = PatternStatus::Infeasible;
                        }
                        break;
                    }
                }
            }
            Ok(PatternEntry {
                signs,
                status,
                witness,
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Ok(PatternSet {
        fingerprint: net.fingerprint(),
        hidden,
        entries,
    })
}

/// Fraction of feasible patterns that some suite input reproduces.
pub fn safety_coverage(
    net: &Network,
    suite: &TestSuite,
    patterns: &PatternSet,
) -> Result<CoverageReport, AnalysisError> {
    if patterns.fingerprint != net.fingerprint() {
        return Err(AnalysisError::StalePatterns);
    }
    let traces = suite.traces(net)?;
    let mut first_hit = vec![None; patterns.entries.len()];
    for (i, t) in traces.iter().enumerate() {
        let slot = &mut first_hit[PatternSet::index_of(&t.pattern())];
        if slot.is_none() {
            *slot = Some(i);
        }
    }
    let items = patterns
        .feasible()
        .map(|(index, e)| {
            let mut item = CoverageItem::new(Target::Pattern {
                index,
                signs: e.signs.iter().map(|s| s.as_i8()).collect(),
            });
            if let Some(i) = first_hit[index] {
                item.covered = true;
                item.witness = Some(Witness {
                    first: i,
                    second: None,
                });
            }
            item
        })
        .collect();
    Ok(CoverageReport::from_items("S", "S".into(), items))
}

/// Singleton-style sign-sign pairs that two feasible patterns can cover.
///
/// SS only looks at signs, so a pair is coverable by some pair of inputs
/// exactly when it is coverable by a pair of feasible patterns.
pub fn coverable_pairs(
    net: &Network,
    patterns: &PatternSet,
    pairs: &FeaturePairSet,
) -> Result<FeaturePairSet, AnalysisError> {
    if patterns.fingerprint != net.fingerprint() {
        return Err(AnalysisError::StalePatterns);
    }
    let feasible: Vec<&[Sign]> = patterns
        .feasible()
        .map(|(_, e)| e.signs.as_slice())
        .collect();
    let at = |signs: &[Sign], n: NodeId| signs[net.hidden_offset(n)];
    let covers = |pair: &FeaturePair, a: &[Sign], b: &[Sign]| {
        let k = pair.k();
        let flips = |n: NodeId| at(a, n) != at(b, n);
        pair.condition.nodes().all(flips)
            && (1..=net.layer_size(k))
                .all(|i| pair.condition.contains(i) || !flips(NodeId::new(k, i)))
            && pair.decision.nodes().all(flips)
    };
    let mut kept = Vec::new();
    for pair in pairs {
        if pair.decision.layer() >= net.depth() {
            continue;
        }
        if feasible
            .iter()
            .any(|a| feasible.iter().any(|b| covers(pair, a, b)))
        {
            kept.push(pair.clone());
        }
    }
    Ok(FeaturePairSet::new(kept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::small_net;
    use crate::network::{DenseLayer, Interval};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_crossing_lines_have_four_regions() {
        // u1 = x1, u2 = x2 on [-1, 1]^2.
        let net = Network::new(
            vec![2, 2, 1],
            vec![
                DenseLayer::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]),
                DenseLayer::new(2, 1, vec![1.0, 1.0], vec![0.0]),
            ],
            Some(vec![Interval::new(-1.0, 1.0); 2]),
        )
        .unwrap();
        let p = enumerate_patterns(&net, 16).unwrap();
        assert_eq!(p.entries.len(), 4);
        assert_eq!(p.feasible_count(), 4);
        for (i, e) in p.feasible() {
            let x = e.witness.as_ref().unwrap();
            assert_eq!(PatternSet::index_of(&net.evaluate(x).unwrap().pattern()), i);
        }
    }

    #[test]
    fn constant_positive_node_never_turns_off() {
        let net = Network::new(
            vec![1, 2, 1],
            vec![
                DenseLayer::new(1, 2, vec![0.0, 1.0], vec![1.0, 0.0]),
                DenseLayer::new(2, 1, vec![1.0, 1.0], vec![0.0]),
            ],
            None,
        )
        .unwrap();
        let p = enumerate_patterns(&net, 16).unwrap();
        for e in &p.entries {
            assert_eq!(e.is_feasible(), e.signs[0] == Sign::Positive);
        }
    }

    #[test]
    fn limit_is_enforced() {
        let net = small_net();
        assert!(matches!(
            enumerate_patterns(&net, 5),
            Err(AnalysisError::TooManyHidden {
                hidden: 6,
                limit: 5
            })
        ));
    }

    #[test]
    fn witnesses_cover_everything() {
        let net = small_net();
        let p = enumerate_patterns(&net, 16).unwrap();
        assert_eq!(p.entries.len(), 64);
        let suite = TestSuite::new(
            p.feasible()
                .filter_map(|(_, e)| e.witness.clone())
                .collect(),
        );
        let r = safety_coverage(&net, &suite, &p).unwrap();
        assert_eq!(r.total, p.feasible_count());
        assert_eq!(r.metric, 1.0);
        assert_eq!(
            safety_coverage(&net, &TestSuite::default(), &p)
                .unwrap()
                .metric,
            0.0
        );
    }

    #[test]
    fn stale_patterns_are_rejected() {
        let p = enumerate_patterns(&small_net(), 16).unwrap();
        let other = Network::random(&[2, 3, 2], 1.0, &mut ChaCha8Rng::seed_from_u64(2));
        assert!(matches!(
            safety_coverage(&other, &TestSuite::default(), &p),
            Err(AnalysisError::StalePatterns)
        ));
    }
}
