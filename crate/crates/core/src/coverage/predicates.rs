//! Sign change, value change and the four covering methods.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CoverageError, NeuronBounds, ValueFunction};
use crate::features::{Feature, FeaturePair};
use crate::network::{ActivationTrace, NodeId, Sign};

fn same_network(t1: &ActivationTrace, t2: &ActivationTrace) -> Result<(), CoverageError> {
    if t1.fingerprint() != t2.fingerprint() {
        return Err(CoverageError::ForeignTrace);
    }
    Ok(())
}

fn check_feature(f: &Feature, t: &ActivationTrace) -> Result<(), CoverageError> {
    if f.layer() < 2 || f.layer() > t.depth() {
        return Err(CoverageError::BadFeature(format!(
            "layer {} has no signs",
            f.layer()
        )));
    }
    let size = t.pre_layer(f.layer()).len();
    if f.indices().last().is_some_and(|&i| i > size) {
        return Err(CoverageError::BadFeature(format!(
            "{f} exceeds layer size {size}"
        )));
    }
    Ok(())
}

#[inline]
fn flips(n: NodeId, t1: &ActivationTrace, t2: &ActivationTrace) -> bool {
    t1.sign_unchecked(n) != t2.sign_unchecked(n)
}

pub(crate) fn sc_raw(f: &Feature, t1: &ActivationTrace, t2: &ActivationTrace) -> bool {
    f.nodes().all(|n| flips(n, t1, t2))
}

pub(crate) fn nsc_raw(f: &Feature, t1: &ActivationTrace, t2: &ActivationTrace) -> bool {
    f.nodes().all(|n| !flips(n, t1, t2))
}

/// `nsc(P_k \ excluded)`; pass `None` for the whole layer.
pub(crate) fn layer_nsc_raw(
    k: usize,
    excluded: Option<&Feature>,
    t1: &ActivationTrace,
    t2: &ActivationTrace,
) -> bool {
    let (u1, u2) = (t1.pre_layer(k), t2.pre_layer(k));
    u1.iter().zip(u2).enumerate().all(|(i, (&a, &b))| {
        excluded.is_some_and(|f| f.contains(i + 1)) || Sign::of(a) == Sign::of(b)
    })
}

/// Every node of `feature` changes sign between the two traces.
pub fn sc(
    feature: &Feature,
    t1: &ActivationTrace,
    t2: &ActivationTrace,
) -> Result<bool, CoverageError> {
    same_network(t1, t2)?;
    check_feature(feature, t1)?;
    Ok(sc_raw(feature, t1, t2))
}

/// Every node of `feature` keeps its sign. For features with more than one
/// node this is not the negation of [`sc`].
pub fn nsc(
    feature: &Feature,
    t1: &ActivationTrace,
    t2: &ActivationTrace,
) -> Result<bool, CoverageError> {
    same_network(t1, t2)?;
    check_feature(feature, t1)?;
    Ok(nsc_raw(feature, t1, t2))
}

/// Value change of `feature` with respect to `g`.
pub fn vc(
    g: &ValueFunction,
    feature: &Feature,
    t1: &ActivationTrace,
    t2: &ActivationTrace,
    bounds: Option<&NeuronBounds>,
) -> Result<bool, CoverageError> {
    same_network(t1, t2)?;
    check_feature(feature, t1)?;
    if let Some(b) = bounds {
        b.check_fingerprint(t1.fingerprint())?;
    }
    g.check(feature, bounds)?;
    Ok(g.eval(feature, t1, t2, bounds))
}

/// A covering method together with its value functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method")]
pub enum CoveringMethod {
    #[serde(rename = "SS")]
    SignSign,
    #[serde(rename = "VS")]
    ValueSign { g: ValueFunction },
    #[serde(rename = "SV")]
    SignValue { g: ValueFunction },
    #[serde(rename = "VV")]
    ValueValue {
        g1: ValueFunction,
        g2: ValueFunction,
    },
}

impl CoveringMethod {
    pub fn id(&self) -> &'static str {
        match self {
            CoveringMethod::SignSign => "SS",
            CoveringMethod::ValueSign { .. } => "VS",
            CoveringMethod::SignValue { .. } => "SV",
            CoveringMethod::ValueValue { .. } => "VV",
        }
    }

    /// Value function on the condition feature, if any.
    pub fn condition_function(&self) -> Option<&ValueFunction> {
        match self {
            CoveringMethod::ValueSign { g } => Some(g),
            CoveringMethod::ValueValue { g1, .. } => Some(g1),
            _ => None,
        }
    }

    /// Value function on the decision feature, if any.
    pub fn decision_function(&self) -> Option<&ValueFunction> {
        match self {
            CoveringMethod::SignValue { g } => Some(g),
            CoveringMethod::ValueValue { g2, .. } => Some(g2),
            _ => None,
        }
    }

    /// Whether the condition feature must change sign.
    pub fn flips_condition(&self) -> bool {
        matches!(
            self,
            CoveringMethod::SignSign | CoveringMethod::SignValue { .. }
        )
    }

    /// Whether the decision feature must change sign.
    pub fn flips_decision(&self) -> bool {
        matches!(
            self,
            CoveringMethod::SignSign | CoveringMethod::ValueSign { .. }
        )
    }

    pub fn is_symmetric(&self) -> bool {
        self.condition_function().is_none_or(|g| g.is_symmetric())
            && self.decision_function().is_none_or(|g| g.is_symmetric())
    }

    pub fn needs_bounds(&self) -> bool {
        self.condition_function().is_some_and(|g| g.needs_bounds())
            || self.decision_function().is_some_and(|g| g.needs_bounds())
    }

    /// Checks that the value functions fit `pair`.
    pub fn check(
        &self,
        pair: &FeaturePair,
        bounds: Option<&NeuronBounds>,
    ) -> Result<(), CoverageError> {
        if let Some(g) = self.condition_function() {
            g.check(&pair.condition, bounds)?;
        }
        if let Some(g) = self.decision_function() {
            g.check(&pair.decision, bounds)?;
        }
        Ok(())
    }

    /// Evaluates the method without re-checking the pair or the traces.
    pub(crate) fn eval(
        &self,
        pair: &FeaturePair,
        t1: &ActivationTrace,
        t2: &ActivationTrace,
        bounds: Option<&NeuronBounds>,
    ) -> bool {
        let k = pair.k();
        let (cond, dec) = (&pair.condition, &pair.decision);
        match self {
            CoveringMethod::SignSign => {
                sc_raw(cond, t1, t2) && layer_nsc_raw(k, Some(cond), t1, t2) && sc_raw(dec, t1, t2)
            }
            CoveringMethod::ValueSign { g } => {
                layer_nsc_raw(k, None, t1, t2)
                    && sc_raw(dec, t1, t2)
                    && g.eval(cond, t1, t2, bounds)
            }
            CoveringMethod::SignValue { g } => {
                sc_raw(cond, t1, t2)
                    && layer_nsc_raw(k, Some(cond), t1, t2)
                    && nsc_raw(dec, t1, t2)
                    && g.eval(dec, t1, t2, bounds)
            }
            CoveringMethod::ValueValue { g1, g2 } => {
                layer_nsc_raw(k, None, t1, t2)
                    && nsc_raw(dec, t1, t2)
                    && g1.eval(cond, t1, t2, bounds)
                    && g2.eval(dec, t1, t2, bounds)
            }
        }
    }

    /// Evaluates the covering predicate `f(pair, x1, x2)`.
    pub fn covered(
        &self,
        pair: &FeaturePair,
        t1: &ActivationTrace,
        t2: &ActivationTrace,
        bounds: Option<&NeuronBounds>,
    ) -> Result<bool, CoverageError> {
        same_network(t1, t2)?;
        check_feature(&pair.condition, t1)?;
        check_feature(&pair.decision, t1)?;
        if pair.decision.layer() != pair.k() + 1 || pair.k() >= t1.depth() {
            return Err(CoverageError::BadFeature(format!(
                "{pair} is not a valid pair"
            )));
        }
        if let Some(b) = bounds {
            b.check_fingerprint(t1.fingerprint())?;
        }
        self.check(pair, bounds)?;
        Ok(self.eval(pair, t1, t2, bounds))
    }
}

impl fmt::Display for CoveringMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoveringMethod::SignSign => write!(f, "SS"),
            CoveringMethod::ValueSign { g } => write!(f, "VS[g={g}]"),
            CoveringMethod::SignValue { g } => write!(f, "SV[g={g}]"),
            CoveringMethod::ValueValue { g1, g2 } => write!(f, "VV[g1={g1},g2={g2}]"),
        }
    }
}

pub fn ss_covered(
    pair: &FeaturePair,
    t1: &ActivationTrace,
    t2: &ActivationTrace,
) -> Result<bool, CoverageError> {
    CoveringMethod::SignSign.covered(pair, t1, t2, None)
}

pub fn vs_covered(
    pair: &FeaturePair,
    t1: &ActivationTrace,
    t2: &ActivationTrace,
    g: &ValueFunction,
    bounds: Option<&NeuronBounds>,
) -> Result<bool, CoverageError> {
    CoveringMethod::ValueSign { g: g.clone() }.covered(pair, t1, t2, bounds)
}

pub fn sv_covered(
    pair: &FeaturePair,
    t1: &ActivationTrace,
    t2: &ActivationTrace,
    g: &ValueFunction,
    bounds: Option<&NeuronBounds>,
) -> Result<bool, CoverageError> {
    CoveringMethod::SignValue { g: g.clone() }.covered(pair, t1, t2, bounds)
}

pub fn vv_covered(
    pair: &FeaturePair,
    t1: &ActivationTrace,
    t2: &ActivationTrace,
    g1: &ValueFunction,
    g2: &ValueFunction,
    bounds: Option<&NeuronBounds>,
) -> Result<bool, CoverageError> {
    CoveringMethod::ValueValue {
        g1: g1.clone(),
        g2: g2.clone(),
    }
    .covered(pair, t1, t2, bounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::value::{Comparator, Norm};
    use crate::network::fixtures::small_net;

    fn traces(a: [f64; 2], b: [f64; 2]) -> (ActivationTrace, ActivationTrace) {
        let net = small_net();
        (net.evaluate(&a).unwrap(), net.evaluate(&b).unwrap())
    }

    #[test]
    fn sign_change_examples() {
        let (t1, t2) = traces([0.1, 0.0], [0.0, -1.0]);
        assert!(sc(&Feature::singleton(2, 1), &t1, &t2).unwrap());
        assert!(!sc(&Feature::singleton(2, 2), &t1, &t2).unwrap());
        assert!(!nsc(&Feature::singleton(2, 1), &t1, &t2).unwrap());
        assert!(!sc(&Feature::singleton(2, 1), &t1, &t1).unwrap());

        let (t1, t2) = traces([0.0, 1.0], [0.1, 0.1]);
        let layer = Feature::new(2, vec![1, 2, 3]).unwrap();
        assert!(nsc(&layer, &t1, &t2).unwrap());
    }

    #[test]
    fn ss_examples() {
        let (t1, t2) = traces([0.1, 0.0], [0.0, -1.0]);
        assert!(ss_covered(&FeaturePair::singletons(2, 1, 1), &t1, &t2).unwrap());
        assert!(!ss_covered(&FeaturePair::singletons(2, 2, 1), &t1, &t2).unwrap());
        assert!(!ss_covered(&FeaturePair::singletons(2, 1, 1), &t1, &t1).unwrap());
    }

    #[test]
    fn vs_examples() {
        let (t1, t2) = traces([0.0, 1.0], [0.1, 0.1]);
        let pair = FeaturePair::new(
            Feature::new(2, vec![1, 2]).unwrap(),
            Feature::singleton(3, 3),
        )
        .unwrap();
        assert!(vs_covered(&pair, &t1, &t2, &ValueFunction::Unconstrained, None).unwrap());
        let far = ValueFunction::NormDistance {
            p: Norm::LInf,
            d: 100.0,
            cmp: Comparator::Ge,
        };
        assert!(!vs_covered(&pair, &t1, &t2, &far, None).unwrap());
        // n(3,1) keeps its sign for these inputs
        let keep = FeaturePair::new(
            Feature::new(2, vec![1, 2]).unwrap(),
            Feature::singleton(3, 1),
        )
        .unwrap();
        assert!(!vs_covered(&keep, &t1, &t2, &ValueFunction::Unconstrained, None).unwrap());
    }

    #[test]
    fn sv_examples() {
        // Inputs ordered so that u[x2]/u[x1] = 12/2.1.
        let (t1, t2) = traces([0.1, -0.1], [0.0, -1.0]);
        let pair = FeaturePair::singletons(2, 1, 2);
        assert!(sv_covered(&pair, &t1, &t2, &ValueFunction::ratio(2.0), None).unwrap());
        assert!(!sv_covered(&pair, &t1, &t2, &ValueFunction::ratio(10.0), None).unwrap());
        // Reverse orientation keeps the worked-example input order.
        let rev = ValueFunction::RatioAtLeast {
            sigma: 2.0,
            orientation: super::super::Orientation::Reverse,
        };
        assert!(sv_covered(&pair, &t2, &t1, &rev, None).unwrap());
        // n(3,1) flips between (0.1,0) and (0,-1), so nsc on the decision fails.
        let (a, b) = traces([0.1, 0.0], [0.0, -1.0]);
        let flip = FeaturePair::singletons(2, 1, 1);
        assert!(!sv_covered(&flip, &a, &b, &ValueFunction::Unconstrained, None).unwrap());
    }

    #[test]
    fn vv_examples() {
        let (t1, t2) = traces([0.1, 0.5], [0.0, 1.0]);
        let pair = FeaturePair::singletons(2, 1, 3);
        let g1 = ValueFunction::Unconstrained;
        assert!(vv_covered(&pair, &t1, &t2, &g1, &ValueFunction::ratio(2.0), None).unwrap());
        assert!(!vv_covered(&pair, &t1, &t2, &g1, &ValueFunction::ratio(5.0), None).unwrap());
        // (0.1,0) vs (0,-1) flips n(2,1), so nsc(P_2) fails.
        let (a, b) = traces([0.1, 0.0], [0.0, -1.0]);
        assert!(!vv_covered(&FeaturePair::singletons(2, 2, 2), &a, &b, &g1, &g1, None).unwrap());
    }

    #[test]
    fn arity_and_bounds_errors() {
        let (t1, t2) = traces([0.1, 0.0], [0.0, -1.0]);
        let two = Feature::new(2, vec![1, 2]).unwrap();
        assert!(matches!(
            vc(&ValueFunction::ratio(2.0), &two, &t1, &t2, None),
            Err(CoverageError::Arity { .. })
        ));
        assert!(matches!(
            vc(&ValueFunction::ExceedsRecordedMax, &two, &t1, &t2, None),
            Err(CoverageError::MissingBounds(_))
        ));
        assert!(vc(&ValueFunction::Unconstrained, &two, &t1, &t2, None).unwrap());
    }

    #[test]
    fn foreign_traces_are_rejected() {
        use rand::SeedableRng;
        let other = crate::network::Network::random(
            &[2, 3, 3, 2],
            1.0,
            &mut rand_chacha::ChaCha8Rng::seed_from_u64(1),
        );
        let (t1, _) = traces([0.1, 0.0], [0.0, -1.0]);
        let t2 = other.evaluate(&[0.0, 0.0]).unwrap();
        assert_eq!(
            sc(&Feature::singleton(2, 1), &t1, &t2),
            Err(CoverageError::ForeignTrace)
        );
    }
}
