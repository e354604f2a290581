//! Adversarial oracle and statistics, activation pattern enumeration with
//! safety coverage, and the empirical subsumption lattice checker.

mod lattice;
mod oracle;
mod patterns;

use thiserror::Error;

use crate::coverage::CoverageError;
use crate::lp::LpError;
use crate::network::NetworkError;

pub use lattice::{
    check_lattice_edge, random_battery_net, run_lattice_battery, BatteryConfig, EdgeKind,
    EdgeVerdict, LatticeEdge, SuiteMetrics,
};
pub use oracle::{
    adversarial_stats, apply_oracle, is_adversarial, AdversarialStats, LayerAdversarial,
    OracleConfig,
};
pub use patterns::{
    coverable_pairs, enumerate_patterns, safety_coverage, PatternEntry, PatternSet, PatternStatus,
    DEFAULT_PATTERN_LIMIT,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid oracle: {0}")]
    BadOracle(String),
    #[error("inputs have dimensions {0} and {1}")]
    Dimension(usize, usize),
    #[error("the network has {hidden} hidden nodes; pattern enumeration is limited to {limit}")]
    TooManyHidden { hidden: usize, limit: usize },
    #[error("pattern set was enumerated for a different network")]
    StalePatterns,
    #[error("report witnesses refer to input {index} but the suite has {len} inputs")]
    WitnessOutOfRange { index: usize, len: usize },
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}
