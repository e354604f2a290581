//! Covering predicates, the pair coverage metric and per-node baselines.

mod baseline;
mod metric;
mod predicates;
mod report;
mod value;

use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::features::FeatureError;
use crate::network::{ActivationTrace, Fingerprint, Network, NetworkError, NodeId};

pub use baseline::{
    compute_bounds, multisection_coverage, neuron_boundary_coverage, neuron_coverage,
    top_m_coverage, NeuronBounds,
};
pub use metric::{coverage, first_witness};
#[allow(unused_imports)]
pub(crate) use predicates::{layer_nsc_raw, nsc_raw, sc_raw};
pub use predicates::{nsc, sc, ss_covered, sv_covered, vc, vs_covered, vv_covered, CoveringMethod};
pub use report::{CoverageItem, CoverageReport, LayerBreakdown, Target, Witness};
pub use value::{section_bounds, section_of, Comparator, Norm, Orientation, ValueFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error("traces were produced by different networks")]
    ForeignTrace,
    #[error("{0}")]
    BadFeature(String),
    #[error("{function} needs a single-node feature, got {size} nodes")]
    Arity { function: &'static str, size: usize },
    #[error("{0} needs neuron bounds from a reference set")]
    MissingBounds(&'static str),
    #[error("no recorded bounds for {0}")]
    NoBoundsFor(NodeId),
    #[error("neuron bounds belong to a different network")]
    StaleBounds,
    #[error("invalid value function: {0}")]
    BadValueFunction(String),
    #[error("the feature pair set is empty")]
    EmptyPairSet,
    #[error("the reference set is empty")]
    EmptyReference,
    #[error("every node has a degenerate bounds interval")]
    AllDegenerate,
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// An ordered list of test inputs with a lazily filled trace cache.
#[derive(Debug, Default)]
pub struct TestSuite {
    inputs: Vec<Vec<f64>>,
    cache: OnceLock<(Fingerprint, Arc<Vec<ActivationTrace>>)>,
}

impl Clone for TestSuite {
    fn clone(&self) -> Self {
        TestSuite {
            inputs: self.inputs.clone(),
            cache: self.cache.clone(),
        }
    }
}

impl PartialEq for TestSuite {
    fn eq(&self, other: &Self) -> bool {
        self.inputs == other.inputs
    }
}

impl TestSuite {
    pub fn new(inputs: Vec<Vec<f64>>) -> Self {
        TestSuite {
            inputs,
            cache: OnceLock::new(),
        }
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn into_inputs(self) -> Vec<Vec<f64>> {
        self.inputs
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Appends `x` unless an identical vector is already present. Returns the
    /// index of `x` in the suite.
    pub fn push_unique(&mut self, x: Vec<f64>) -> usize {
        if let Some(i) = self.index_of(&x) {
            return i;
        }
        self.cache = OnceLock::new();
        self.inputs.push(x);
        self.inputs.len() - 1
    }

    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        self.inputs.iter().position(|y| y.as_slice() == x)
    }

    /// Traces of every input under `net`, computed once per network.
    pub fn traces(&self, net: &Network) -> Result<Arc<Vec<ActivationTrace>>, CoverageError> {
        if let Some((fp, traces)) = self.cache.get() {
            if *fp == net.fingerprint() {
                return Ok(traces.clone());
            }
        }
        let traces = Arc::new(
            self.inputs
                .iter()
                .map(|x| net.evaluate(x))
                .collect::<Result<Vec<_>, _>>()?,
        );
        let _ = self.cache.set((net.fingerprint(), traces.clone()));
        Ok(traces)
    }
}

impl From<Vec<Vec<f64>>> for TestSuite {
    fn from(inputs: Vec<Vec<f64>>) -> Self {
        TestSuite::new(inputs)
    }
}
