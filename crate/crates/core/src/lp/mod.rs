//! Linear models of fixed activation patterns and the simplex behind them.

mod encode;
mod presolve;
mod problem;
mod simplex;

use thiserror::Error;

use crate::coverage::CoverageError;

pub use encode::{
    add_linf_objective, add_test_condition, build_pattern_model, build_sign_model, Constraint,
    ConstraintKind, LpModel, LpSolution, ModelOptions, DEFAULT_DELTA, LINF_TOLERANCE,
};
pub use problem::{solve_lp, Cmp, LinearProgram, Row, Solution, SolverOptions, Status};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("model depth {depth} is outside 2..={max}")]
    BadDepth { depth: usize, max: usize },
    #[error("sign vector has {actual} entries, expected {expected}")]
    PatternLength { expected: usize, actual: usize },
    #[error("model encodes layers up to {model} but the decision feature is in layer {decision}")]
    DepthMismatch { model: usize, decision: usize },
    #[error("{0} cannot be expressed as linear constraints")]
    NotLinearizable(&'static str),
    #[error("seed has dimension {actual}, expected {expected}")]
    Dimension { expected: usize, actual: usize },
    #[error("delta must be finite and non-negative, got {0}")]
    BadDelta(f64),
    #[error("trace does not belong to this network")]
    ForeignTrace,
    #[error(transparent)]
    Coverage(#[from] CoverageError),
}
