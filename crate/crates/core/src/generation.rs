//! Test pair generation: a concolic engine that solves one LP per seed input
//! and a gradient-guided search seeded by an FGSM step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::{
    coverage, first_witness, layer_nsc_raw, CoverageError, CoverageReport, CoveringMethod,
    NeuronBounds, Orientation, TestSuite, ValueFunction,
};
use crate::features::{FeaturePair, FeaturePairSet};
use crate::lp::{
    add_linf_objective, add_test_condition, build_pattern_model, LpError, ModelOptions,
    SolverOptions, Status, DEFAULT_DELTA,
};
use crate::network::{ActivationTrace, Network, NetworkError, Objective, Sign};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerationError {
    #[error("{0}")]
    Incompatible(String),
    #[error("invalid budget: {0}")]
    BadBudget(String),
    #[error("the seed corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Lp,
    Gradient,
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Lp => "lp",
            Engine::Gradient => "gradient",
        })
    }
}

/// How the gradient search picks its first `x2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientInit {
    /// `x1 + eps0 * sign(grad)`.
    #[default]
    Fgsm,
    /// `x1` plus uniform noise in `[-eps0, eps0]` per coordinate.
    Uniform,
}

/// Settings shared by every pair of a generation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub engine: Engine,
    /// Search steps per seed (gradient engine).
    pub max_steps: usize,
    /// Seeds tried per pair, in corpus order; `None` tries them all.
    pub max_seeds: Option<usize>,
    pub epsilon0: f64,
    pub init: GradientInit,
    /// Strictness of `u < 0` in the LP engine.
    pub delta: f64,
    pub max_lp_iterations: usize,
    pub seed: u64,
    /// Before running an engine, look for a covering pair inside the corpus.
    pub corpus_pairs: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            engine: Engine::Lp,
            max_steps: 100,
            max_seeds: None,
            epsilon0: 0.1,
            init: GradientInit::Fgsm,
            delta: DEFAULT_DELTA,
            max_lp_iterations: 100_000,
            seed: 0,
            corpus_pairs: true,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.max_steps == 0 {
            return Err(GenerationError::BadBudget(
                "max_steps must be at least 1".into(),
            ));
        }
        if self.max_seeds == Some(0) {
            return Err(GenerationError::BadBudget(
                "max_seeds must be at least 1".into(),
            ));
        }
        if !(self.epsilon0.is_finite() && self.epsilon0 > 0.0) {
            return Err(GenerationError::BadBudget(format!(
                "epsilon0 must be positive, got {}",
                self.epsilon0
            )));
        }
        if self.max_lp_iterations == 0 {
            return Err(GenerationError::BadBudget(
                "max_lp_iterations must be at least 1".into(),
            ));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(GenerationError::BadBudget(format!(
                "delta must be non-negative, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions {
            max_iterations: self.max_lp_iterations,
            ..SolverOptions::default()
        }
    }
}

/// One pair to cover with one method.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub method: CoveringMethod,
    pub pair: FeaturePair,
    pub config: GenerationConfig,
    /// Scalar followed by the gradient search. Defaults to an oriented sum
    /// over the decision feature, see [`default_objective`].
    pub objective: Option<Objective>,
}

impl GenerationRequest {
    pub fn new(method: CoveringMethod, pair: FeaturePair, config: GenerationConfig) -> Self {
        GenerationRequest {
            method,
            pair,
            config,
            objective: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationStatus {
    Found,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub engine: Engine,
    pub seeds_tried: usize,
    /// Corpus index of the seed that produced the pair.
    pub seed_index: Option<usize>,
    /// Gradient steps taken on the successful seed, or on all seeds when exhausted.
    pub steps: usize,
    pub lp_status: Option<Status>,
    pub lp_objective: Option<f64>,
    /// The LP answer failed re-verification and was recomputed with a margin.
    pub margin_retry: bool,
    pub final_epsilon: Option<f64>,
    /// L-infinity distance between `x1` and `x2`.
    pub distance: Option<f64>,
}

impl Diagnostics {
    fn new(engine: Engine) -> Self {
        Diagnostics {
            engine,
            seeds_tried: 0,
            seed_index: None,
            steps: 0,
            lp_status: None,
            lp_objective: None,
            margin_retry: false,
            final_epsilon: None,
            distance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub status: GenerationStatus,
    pub x1: Option<Vec<f64>>,
    pub x2: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl GenerationResult {
    fn exhausted(diagnostics: Diagnostics) -> Self {
        GenerationResult {
            status: GenerationStatus::Exhausted,
            x1: None,
            x2: None,
            diagnostics,
        }
    }

    fn found(x1: Vec<f64>, x2: Vec<f64>, mut diagnostics: Diagnostics) -> Self {
        diagnostics.distance = Some(linf(&x1, &x2));
        GenerationResult {
            status: GenerationStatus::Found,
            x1: Some(x1),
            x2: Some(x2),
            diagnostics,
        }
    }

    pub fn is_found(&self) -> bool {
        self.status == GenerationStatus::Found
    }
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn check_request(
    net: &Network,
    request: &GenerationRequest,
    engine: Engine,
    corpus: &[Vec<f64>],
    bounds: Option<&NeuronBounds>,
) -> Result<(), GenerationError> {
    if request.config.engine != engine {
        return Err(GenerationError::Incompatible(format!(
            "request is for the {} engine, not {engine}",
            request.config.engine
        )));
    }
    request.config.validate()?;
    request
        .pair
        .validate(net, true)
        .map_err(CoverageError::from)?;
    request.method.check(&request.pair, bounds)?;
    if corpus.is_empty() {
        return Err(GenerationError::EmptyCorpus);
    }
    Ok(())
}

/// Whether the LP engine can encode every value function of `method`.
pub fn lp_compatible(method: &CoveringMethod) -> Result<(), GenerationError> {
    for g in method
        .condition_function()
        .into_iter()
        .chain(method.decision_function())
    {
        if !g.is_linearizable() {
            return Err(GenerationError::Incompatible(format!(
                "{} has no linear encoding; use the gradient engine",
                g.name()
            )));
        }
    }
    Ok(())
}

fn seeds<'a>(
    corpus: &'a [Vec<f64>],
    config: &GenerationConfig,
) -> impl Iterator<Item = (usize, &'a Vec<f64>)> {
    corpus
        .iter()
        .enumerate()
        .take(config.max_seeds.unwrap_or(usize::MAX))
}

/// Concolic generation: for each seed `x1`, the activation pattern of `x1`
/// up to the decision layer is fixed, the covering condition is added and the
/// L-infinity distance to `x1` is minimised. The first solution that passes
/// the covering predicate on the real network is returned.
pub fn generate_lp(
    net: &Network,
    request: &GenerationRequest,
    corpus: &[Vec<f64>],
    bounds: Option<&NeuronBounds>,
) -> Result<GenerationResult, GenerationError> {
    check_request(net, request, Engine::Lp, corpus, bounds)?;
    lp_compatible(&request.method)?;
    let config = &request.config;
    let depth = request.pair.decision.layer();
    let solver = config.solver();
    let mut diag = Diagnostics::new(Engine::Lp);
    for (index, x1) in seeds(corpus, config) {
        diag.seeds_tried += 1;
        let t1 = net.evaluate(x1)?;
        // Re-evaluation can land a hair on the wrong side of a strict
        // threshold, so a failed check is retried once with a margin.
        let margin = (10.0 * config.delta).max(1e-6);
        let attempts = [
            ModelOptions {
                delta: config.delta,
                ..ModelOptions::default()
            },
            ModelOptions {
                delta: config.delta + margin,
                margin,
                ..ModelOptions::default()
            },
        ];
        for (attempt, options) in attempts.iter().enumerate() {
            let model = build_pattern_model(net, &t1, depth, options)?;
            let model = add_test_condition(&model, &request.pair, &request.method, &t1, bounds)?;
            let model = add_linf_objective(&model, x1)?;
            let solution = model.solve(&solver);
            diag.lp_status = Some(solution.status);
            if solution.status != Status::Optimal {
                break;
            }
            let mut x2 = solution.x2;
            net.clamp_to_domain(&mut x2);
            let t2 = net.evaluate(&x2)?;
            if request.method.covered(&request.pair, &t1, &t2, bounds)? {
                diag.seed_index = Some(index);
                diag.lp_objective = Some(solution.objective);
                diag.margin_retry = attempt > 0;
                return Ok(GenerationResult::found(x1.clone(), x2, diag));
            }
        }
    }
    Ok(GenerationResult::exhausted(diag))
}

/// The covering predicate with every clause on the pair's own features
/// removed: the layer-`k` nodes outside the condition keep their signs.
pub fn widened_predicate(
    method: &CoveringMethod,
    pair: &FeaturePair,
    t1: &ActivationTrace,
    t2: &ActivationTrace,
) -> Result<bool, CoverageError> {
    if t1.fingerprint() != t2.fingerprint() {
        return Err(CoverageError::ForeignTrace);
    }
    // Every method keeps nsc(P_k) on its non-condition nodes; the value
    // functions only speak about the pair itself.
    let _ = method;
    if pair.k() < 2 || pair.k() >= t1.depth() {
        return Err(CoverageError::BadFeature(format!(
            "{pair} is not a valid pair"
        )));
    }
    Ok(layer_nsc_raw(pair.k(), Some(&pair.condition), t1, t2))
}

/// Signed sum over the decision feature whose ascent pushes every decision
/// node the way the method wants it to move from `t1`: across zero when the
/// decision must flip, away from zero when its value must grow, towards
/// zero for the reversed ratio.
pub fn default_objective(
    method: &CoveringMethod,
    pair: &FeaturePair,
    t1: &ActivationTrace,
) -> Objective {
    let towards_zero = method.flips_decision()
        || matches!(
            method.decision_function(),
            Some(ValueFunction::RatioAtLeast {
                orientation: Orientation::Reverse,
                ..
            })
        );
    let terms = pair
        .decision
        .nodes()
        .map(|n| {
            let away = match t1.sign_unchecked(n) {
                Sign::Positive => 1.0,
                Sign::Negative => -1.0,
            };
            (n.index, if towards_zero { -away } else { away })
        })
        .collect();
    Objective::Weighted {
        layer: pair.decision.layer(),
        terms,
    }
}

/// Gradient-guided search. Per seed `x1`, `x2` starts one FGSM step away and
/// is moved along the gradient of the objective: towards it while the
/// widened predicate holds, against it after a step broke the layer-`k`
/// pattern. The step size halves after a failure and doubles back towards
/// `eps0` after two successes in a row.
pub fn generate_gradient(
    net: &Network,
    request: &GenerationRequest,
    corpus: &[Vec<f64>],
    bounds: Option<&NeuronBounds>,
) -> Result<GenerationResult, GenerationError> {
    check_request(net, request, Engine::Gradient, corpus, bounds)?;
    let config = &request.config;
    let (method, pair) = (&request.method, &request.pair);
    let eps0 = config.epsilon0;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut diag = Diagnostics::new(Engine::Gradient);
    for (index, x1) in seeds(corpus, config) {
        diag.seeds_tried += 1;
        let t1 = net.evaluate(x1)?;
        let objective = request
            .objective
            .clone()
            .unwrap_or_else(|| default_objective(method, pair, &t1));
        let mut x2: Vec<f64> = match config.init {
            GradientInit::Fgsm => {
                let g = net.gradient_at(&t1, &objective)?;
                x1.iter()
                    .zip(&g)
                    .map(|(&x, &d)| x + eps0 * sign(d))
                    .collect()
            }
            GradientInit::Uniform => x1
                .iter()
                .map(|&x| x + rng.random_range(-eps0..=eps0))
                .collect(),
        };
        net.clamp_to_domain(&mut x2);
        let mut eps = eps0;
        let mut streak = 0;
        for step in 0..=config.max_steps {
            let t2 = net.evaluate(&x2)?;
            if method.covered(pair, &t1, &t2, bounds)? {
                diag.steps += step;
                diag.seed_index = Some(index);
                diag.final_epsilon = Some(eps);
                return Ok(GenerationResult::found(x1.clone(), x2, diag));
            }
            if step == config.max_steps {
                diag.steps += step;
                break;
            }
            let widened = widened_predicate(method, pair, &t1, &t2)?;
            if widened {
                streak += 1;
                if streak == 2 {
                    eps = (2.0 * eps).min(eps0);
                    streak = 0;
                }
            } else {
                eps *= 0.5;
                streak = 0;
            }
            let g = net.gradient_at(&t2, &objective)?;
            let dir = if widened { 1.0 } else { -1.0 };
            for (x, d) in x2.iter_mut().zip(&g) {
                *x += dir * eps * d;
            }
            net.clamp_to_domain(&mut x2);
        }
        diag.final_epsilon = Some(eps);
    }
    Ok(GenerationResult::exhausted(diag))
}

fn sign(d: f64) -> f64 {
    if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Runs the engine named in the request.
pub fn generate(
    net: &Network,
    request: &GenerationRequest,
    corpus: &[Vec<f64>],
    bounds: Option<&NeuronBounds>,
) -> Result<GenerationResult, GenerationError> {
    match request.config.engine {
        Engine::Lp => generate_lp(net, request, corpus, bounds),
        Engine::Gradient => generate_gradient(net, request, corpus, bounds),
    }
}

/// Where a suite input came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Index of the input in the emitted suite.
    pub index: usize,
    /// Index of the feature pair whose search added the input.
    pub pair_index: usize,
    pub pair: String,
    pub role: Role,
    /// `corpus` when the pair was already covered by two corpus inputs.
    pub source: String,
    pub distance: Option<f64>,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    First,
    Second,
}

/// Per-pair outcome of a suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub pair: String,
    /// `skipped` when earlier inputs already covered the pair.
    pub outcome: String,
    pub result: Option<GenerationResult>,
}

#[derive(Debug, Clone)]
pub struct GeneratedSuite {
    pub suite: TestSuite,
    pub report: CoverageReport,
    pub provenance: Vec<Provenance>,
    pub outcomes: Vec<PairOutcome>,
}

enum PairWork {
    Corpus(usize, usize),
    Engine(GenerationResult),
}

/// Generates inputs for every pair and scores the accumulated suite.
///
/// Pairs are searched concurrently, each on its own. The results are then
/// merged in pair order: a pair already covered by inputs merged before it
/// contributes nothing, otherwise its two inputs are appended (duplicates
/// dropped). The suite therefore depends only on the inputs, not on the
/// scheduling.
pub fn generate_suite(
    net: &Network,
    pairs: &FeaturePairSet,
    method: &CoveringMethod,
    corpus: &[Vec<f64>],
    config: &GenerationConfig,
    bounds: Option<&NeuronBounds>,
) -> Result<GeneratedSuite, GenerationError> {
    if pairs.is_empty() {
        return Err(CoverageError::EmptyPairSet.into());
    }
    config.validate()?;
    if corpus.is_empty() {
        return Err(GenerationError::EmptyCorpus);
    }
    if config.engine == Engine::Lp {
        lp_compatible(method)?;
    }
    for pair in pairs {
        pair.validate(net, true).map_err(CoverageError::from)?;
        method.check(pair, bounds)?;
    }
    let corpus_suite = TestSuite::new(corpus.to_vec());
    let corpus_traces = corpus_suite.traces(net)?;

    let work: Vec<PairWork> = pairs
        .pairs()
        .par_iter()
        .enumerate()
        .map(|(p, pair)| {
            if config.corpus_pairs {
                if let Some((i, j)) = first_witness(method, pair, &corpus_traces, bounds) {
                    return Ok(PairWork::Corpus(i, j));
                }
            }
            // Each pair gets its own stream so the result does not depend on
            // which thread ran it.
            let config = GenerationConfig {
                seed: config.seed.wrapping_add(p as u64),
                ..config.clone()
            };
            let request = GenerationRequest::new(method.clone(), pair.clone(), config);
            generate(net, &request, corpus, bounds).map(PairWork::Engine)
        })
        .collect::<Result<_, GenerationError>>()?;

    let mut suite = TestSuite::default();
    let mut provenance: Vec<Provenance> = Vec::new();
    let mut outcomes = Vec::with_capacity(pairs.len());
    for (p, (pair, w)) in pairs.iter().zip(work).enumerate() {
        let traces = suite.traces(net)?;
        if first_witness(method, pair, &traces, bounds).is_some() {
            let result = match w {
                PairWork::Engine(r) => Some(r),
                PairWork::Corpus(..) => None,
            };
            outcomes.push(PairOutcome {
                pair: pair.to_string(),
                outcome: "skipped".into(),
                result,
            });
            continue;
        }
        let (x1, x2, source, distance, steps, result) = match w {
            PairWork::Corpus(i, j) => {
                let d = linf(&corpus[i], &corpus[j]);
                (
                    corpus[i].clone(),
                    corpus[j].clone(),
                    "corpus".to_string(),
                    Some(d),
                    None,
                    None,
                )
            }
            PairWork::Engine(r) => match (&r.x1, &r.x2) {
                (Some(a), Some(b)) => {
                    let d = r.diagnostics.distance;
                    let steps =
                        (r.diagnostics.engine == Engine::Gradient).then_some(r.diagnostics.steps);
                    (
                        a.clone(),
                        b.clone(),
                        r.diagnostics.engine.to_string(),
                        d,
                        steps,
                        Some(r),
                    )
                }
                _ => {
                    outcomes.push(PairOutcome {
                        pair: pair.to_string(),
                        outcome: "exhausted".into(),
                        result: Some(r),
                    });
                    continue;
                }
            },
        };
        for (x, role) in [(x1, Role::First), (x2, Role::Second)] {
            let before = suite.len();
            let index = suite.push_unique(x);
            if index == before {
                provenance.push(Provenance {
                    index,
                    pair_index: p,
                    pair: pair.to_string(),
                    role,
                    source: source.clone(),
                    distance,
                    steps,
                });
            }
        }
        outcomes.push(PairOutcome {
            pair: pair.to_string(),
            outcome: "found".into(),
            result,
        });
    }
    let report = coverage(net, pairs, &suite, method, bounds)?;
    Ok(GeneratedSuite {
        suite,
        report,
        provenance,
        outcomes,
    })
}
