use rayon::prelude::*;

use super::report::{CoverageItem, CoverageReport, Target, Witness};
use super::{CoverageError, CoveringMethod, NeuronBounds, TestSuite};
use crate::features::{FeaturePair, FeaturePairSet};
use crate::network::{ActivationTrace, Network};

/// Lexicographically first ordered pair `(i, j)`, `i != j`, of traces that
/// covers `pair`.
pub fn first_witness(
    method: &CoveringMethod,
    pair: &FeaturePair,
    traces: &[ActivationTrace],
    bounds: Option<&NeuronBounds>,
) -> Option<(usize, usize)> {
    for (i, t1) in traces.iter().enumerate() {
        for (j, t2) in traces.iter().enumerate() {
            if i != j && method.eval(pair, t1, t2, bounds) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Fraction of `pairs` covered by some ordered pair of distinct suite inputs.
pub fn coverage(
    net: &Network,
    pairs: &FeaturePairSet,
    suite: &TestSuite,
    method: &CoveringMethod,
    bounds: Option<&NeuronBounds>,
) -> Result<CoverageReport, CoverageError> {
    if pairs.is_empty() {
        return Err(CoverageError::EmptyPairSet);
    }
    if let Some(b) = bounds {
        b.check_fingerprint(net.fingerprint())?;
    }
    for pair in pairs {
        pair.validate(net, true)?;
        method.check(pair, bounds)?;
    }
    let traces = suite.traces(net)?;
    let items: Vec<CoverageItem> = pairs
        .pairs()
        .par_iter()
        .map(|pair| {
            let mut item = CoverageItem::new(Target::pair(pair));
            if let Some((i, j)) = first_witness(method, pair, &traces, bounds) {
                item.covered = true;
                item.witness = Some(Witness {
                    first: i,
                    second: Some(j),
                });
                item.distance = Some(linf(&suite.inputs()[i], &suite.inputs()[j]));
            }
            item
        })
        .collect();
    Ok(CoverageReport::from_items(
        method.id(),
        method.to_string(),
        items,
    ))
}

pub(crate) fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
