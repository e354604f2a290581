//! Structural coverage testing for feedforward ReLU networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`network`]: fully connected ReLU networks, activation traces, gradients.
//! - [`features`]: features (node sets) and enumeration of condition/decision pairs.
//! - [`coverage`]: sign/value change predicates, the four covering methods
//!   (SS, VS, SV, VV), the pair coverage metric and the per-node baselines.
//! - [`lp`]: linear models of a fixed activation pattern and the simplex solver
//!   behind them.
//! - [`generation`]: concolic (LP) and gradient-guided test pair generation.
//! - [`analysis`]: adversarial oracle, distance statistics, activation pattern
//!   enumeration and the criteria subsumption checker.
//! - [`io`]: dataset files and JSON helpers shared by the command line tool.

pub mod analysis;
pub mod coverage;
pub mod features;
pub mod generation;
pub mod io;
pub mod lp;
pub mod network;

pub use coverage::{CoverageReport, CoveringMethod, NeuronBounds, TestSuite, ValueFunction};
pub use features::{Feature, FeaturePair, FeaturePairSet};
pub use network::{ActivationTrace, Network, NodeId, Sign};
