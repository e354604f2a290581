//! Empirical falsification of the weaker-than relation between criteria.
//!
//! `M1 ⪯ M2` says that every suite with `M2 = 1` also has `M1 = 1`. An edge
//! is checked by computing both metrics on many suites and looking for one
//! that completes the stronger criterion but not the weaker one.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::patterns::{coverable_pairs, enumerate_patterns, safety_coverage, PatternSet};
use super::AnalysisError;
use crate::coverage::{
    compute_bounds, coverage, multisection_coverage, neuron_boundary_coverage, neuron_coverage,
    top_m_coverage, CoverageError, CoverageReport, CoveringMethod, NeuronBounds, Target, TestSuite,
    ValueFunction,
};
use crate::features::enumerate_singleton_pairs;
use crate::network::{Interval, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    #[serde(rename = "N<=SS")]
    NSs,
    #[serde(rename = "N<=VS")]
    NVs,
    #[serde(rename = "N<=MN")]
    NMn,
    #[serde(rename = "MN<=SV")]
    MnSv,
    #[serde(rename = "MN<=VV")]
    MnVv,
    #[serde(rename = "NB<=SV")]
    NbSv,
    #[serde(rename = "NB<=VV")]
    NbVv,
    #[serde(rename = "TN<=VV")]
    TnVv,
    #[serde(rename = "TN<=VS")]
    TnVs,
    #[serde(rename = "SS<=S")]
    SsS,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 10] = [
        EdgeKind::NSs,
        EdgeKind::NVs,
        EdgeKind::NMn,
        EdgeKind::MnSv,
        EdgeKind::MnVv,
        EdgeKind::NbSv,
        EdgeKind::NbVv,
        EdgeKind::TnVv,
        EdgeKind::TnVs,
        EdgeKind::SsS,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::NSs => "N<=SS",
            EdgeKind::NVs => "N<=VS",
            EdgeKind::NMn => "N<=MN",
            EdgeKind::MnSv => "MN<=SV",
            EdgeKind::MnVv => "MN<=VV",
            EdgeKind::NbSv => "NB<=SV",
            EdgeKind::NbVv => "NB<=VV",
            EdgeKind::TnVv => "TN<=VV",
            EdgeKind::TnVs => "TN<=VS",
            EdgeKind::SsS => "SS<=S",
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EdgeKind {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_uppercase().replace("⪯", "<=");
        EdgeKind::ALL
            .into_iter()
            .find(|e| e.name() == key)
            .ok_or_else(|| AnalysisError::Precondition(format!("unknown lattice edge {s:?}")))
    }
}

/// An edge with the parameters its criteria need.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeEdge {
    pub kind: EdgeKind,
    /// Sections for MN, at least 2 for `N<=MN`.
    pub sections: usize,
    /// `m` for TN and for `rank_at_most`.
    pub top: usize,
    /// Largest hidden count for which `SS<=S` enumerates patterns.
    pub pattern_limit: usize,
}

impl LatticeEdge {
    pub fn new(kind: EdgeKind) -> Self {
        LatticeEdge {
            kind,
            sections: 2,
            top: 1,
            pattern_limit: 10,
        }
    }

    /// The covering methods whose metrics are combined (by minimum) into the
    /// stronger side, with the value functions used to instantiate them.
    pub fn stronger_methods(&self) -> Vec<CoveringMethod> {
        let u = ValueFunction::Unconstrained;
        let sections = |m: usize| (1..=m).map(move |j| ValueFunction::InSubsection { j, m });
        let rank = ValueFunction::RankAtMost { m: self.top };
        match self.kind {
            EdgeKind::NSs | EdgeKind::SsS => vec![CoveringMethod::SignSign],
            EdgeKind::NVs => vec![CoveringMethod::ValueSign { g: u }],
            EdgeKind::NMn => Vec::new(),
            EdgeKind::MnSv => sections(self.sections)
                .map(|g| CoveringMethod::SignValue { g })
                .collect(),
            EdgeKind::MnVv => sections(self.sections)
                .map(|g2| CoveringMethod::ValueValue { g1: u.clone(), g2 })
                .collect(),
            EdgeKind::NbSv => vec![CoveringMethod::SignValue {
                g: ValueFunction::ExceedsRecordedMax,
            }],
            EdgeKind::NbVv => vec![CoveringMethod::ValueValue {
                g1: u,
                g2: ValueFunction::ExceedsRecordedMax,
            }],
            EdgeKind::TnVv => vec![CoveringMethod::ValueValue { g1: rank, g2: u }],
            EdgeKind::TnVs => vec![CoveringMethod::ValueSign { g: rank }],
        }
    }

    pub fn describe(&self) -> String {
        let methods: Vec<String> = self
            .stronger_methods()
            .iter()
            .map(|m| m.to_string())
            .collect();
        match self.kind {
            EdgeKind::NMn => format!("{} with m={}", self.kind, self.sections),
            EdgeKind::SsS => format!("{} on pairs coverable by feasible patterns", self.kind),
            _ => format!("{}: {}", self.kind, methods.join(" & ")),
        }
    }
}

/// Both metrics of one edge on one suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteMetrics {
    pub weaker: f64,
    pub stronger: f64,
    pub weaker_complete: bool,
    pub stronger_complete: bool,
}

impl SuiteMetrics {
    pub fn violates(&self) -> bool {
        self.stronger_complete && !self.weaker_complete
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub net: usize,
    pub suite: usize,
    pub metrics: SuiteMetrics,
    pub inputs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeVerdict {
    pub edge: String,
    pub description: String,
    pub nets: usize,
    /// Nets where the edge's side condition did not hold.
    pub skipped_nets: usize,
    pub suites: usize,
    /// Suites on which the stronger criterion was complete.
    pub non_vacuous: usize,
    pub counterexample: Option<Counterexample>,
}

impl EdgeVerdict {
    fn empty(edge: &LatticeEdge) -> Self {
        EdgeVerdict {
            edge: edge.kind.name().to_string(),
            description: edge.describe(),
            nets: 0,
            skipped_nets: 0,
            suites: 0,
            non_vacuous: 0,
            counterexample: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }

    fn merge(&mut self, other: EdgeVerdict) {
        self.nets += other.nets;
        self.skipped_nets += other.skipped_nets;
        self.suites += other.suites;
        self.non_vacuous += other.non_vacuous;
        if self.counterexample.is_none() {
            self.counterexample = other.counterexample;
        }
    }
}

/// Layers whose nodes the per-node side is measured on.
#[derive(Clone, Copy)]
enum Scope {
    AllHidden,
    /// `3..=K-1`: every node here is the decision of some pair.
    Decisions,
    /// `2..=K-2`: every node here is the condition of some pair.
    Conditions,
}

impl Scope {
    fn contains(self, net: &Network, layer: usize) -> bool {
        let k = net.depth();
        match self {
            Scope::AllHidden => (2..k).contains(&layer),
            Scope::Decisions => (3..k).contains(&layer),
            Scope::Conditions => (2..k - 1).contains(&layer),
        }
    }
}

/// Covered and counted nodes of a per-node report inside `scope`.
fn restricted(net: &Network, report: &CoverageReport, scope: Scope) -> (usize, usize) {
    report
        .items
        .iter()
        .filter(|i| !i.excluded)
        .filter(|i| matches!(i.target, Target::Node { layer, .. } if scope.contains(net, layer)))
        .fold((0, 0), |(c, t), i| (c + usize::from(i.covered), t + 1))
}

fn metric_of(covered: usize, total: usize) -> (f64, bool) {
    if total == 0 {
        (1.0, true)
    } else {
        (covered as f64 / total as f64, covered == total)
    }
}

/// Everything an edge needs besides the suite.
struct Prepared<'a> {
    edge: LatticeEdge,
    bounds: Option<NeuronBounds>,
    patterns: Option<std::borrow::Cow<'a, PatternSet>>,
    pairs: crate::features::FeaturePairSet,
}

fn prepare<'a>(
    net: &Network,
    edge: &LatticeEdge,
    reference: &TestSuite,
    patterns: Option<&'a PatternSet>,
) -> Result<Option<Prepared<'a>>, AnalysisError> {
    if net.depth() < 4 {
        return Err(AnalysisError::Precondition(
            "lattice edges need at least two hidden layers".into(),
        ));
    }
    let needs_bounds = matches!(
        edge.kind,
        EdgeKind::NMn | EdgeKind::MnSv | EdgeKind::MnVv | EdgeKind::NbSv | EdgeKind::NbVv
    );
    let bounds = if needs_bounds {
        Some(compute_bounds(net, reference)?)
    } else {
        None
    };
    if edge.kind == EdgeKind::NMn {
        if edge.sections < 2 {
            return Err(AnalysisError::Precondition(
                "N<=MN needs at least two sections".into(),
            ));
        }
        let b = bounds.as_ref().expect("computed above");
        if !net.hidden_nodes().all(|n| b.is_nontrivial(n)) {
            return Ok(None);
        }
    }
    let all_pairs = enumerate_singleton_pairs(net, false);
    let (patterns, pairs) = if edge.kind == EdgeKind::SsS {
        let p = match patterns {
            Some(p) => std::borrow::Cow::Borrowed(p),
            None if net.hidden_count() <= edge.pattern_limit => {
                std::borrow::Cow::Owned(enumerate_patterns(net, edge.pattern_limit)?)
            }
            None => return Ok(None),
        };
        let pairs = coverable_pairs(net, &p, &all_pairs)?;
        (Some(p), pairs)
    } else {
        (None, all_pairs)
    };
    Ok(Some(Prepared {
        edge: *edge,
        bounds,
        patterns,
        pairs,
    }))
}

fn suite_metrics(
    net: &Network,
    p: &Prepared<'_>,
    suite: &TestSuite,
) -> Result<SuiteMetrics, AnalysisError> {
    let edge = &p.edge;
    let bounds = p.bounds.as_ref();
    let node_side = |report: CoverageReport, scope: Scope| {
        let (covered, total) = restricted(net, &report, scope);
        metric_of(covered, total)
    };
    let (weaker, weaker_complete) = match edge.kind {
        EdgeKind::NSs | EdgeKind::NMn => node_side(neuron_coverage(net, suite)?, Scope::AllHidden),
        EdgeKind::NVs => node_side(neuron_coverage(net, suite)?, Scope::Decisions),
        EdgeKind::MnSv | EdgeKind::MnVv => {
            match multisection_coverage(net, suite, bounds.expect("prepared"), edge.sections, false)
            {
                Ok(r) => node_side(r, Scope::Decisions),
                // Nothing to cover.
                Err(CoverageError::AllDegenerate) => (1.0, true),
                Err(e) => return Err(e.into()),
            }
        }
        EdgeKind::NbSv | EdgeKind::NbVv => node_side(
            neuron_boundary_coverage(net, suite, bounds.expect("prepared"))?,
            Scope::Decisions,
        ),
        EdgeKind::TnVv | EdgeKind::TnVs => {
            node_side(top_m_coverage(net, suite, edge.top)?, Scope::Conditions)
        }
        EdgeKind::SsS => {
            if p.pairs.is_empty() {
                (1.0, true)
            } else {
                let r = coverage(net, &p.pairs, suite, &CoveringMethod::SignSign, None)?;
                metric_of(r.covered, r.total)
            }
        }
    };
    let (stronger, stronger_complete) = match edge.kind {
        EdgeKind::NMn => {
            let r =
                multisection_coverage(net, suite, bounds.expect("prepared"), edge.sections, false)?;
            metric_of(r.covered, r.total)
        }
        EdgeKind::SsS => {
            let r = safety_coverage(net, suite, p.patterns.as_ref().expect("prepared"))?;
            metric_of(r.covered, r.total)
        }
        _ => {
            let mut worst = (1.0, true);
            for method in edge.stronger_methods() {
                let r = coverage(net, &p.pairs, suite, &method, bounds)?;
                let (m, c) = metric_of(r.covered, r.total);
                worst = (f64::min(worst.0, m), worst.1 && c);
            }
            worst
        }
    };
    Ok(SuiteMetrics {
        weaker,
        stronger,
        weaker_complete,
        stronger_complete,
    })
}

/// Checks one edge on one network over `suites`.
///
/// `reference` provides the neuron bounds for MN and NB. For `SS<=S` the
/// pattern set is enumerated unless one is passed in; networks with more
/// hidden nodes than the edge's pattern limit are skipped, as are networks
/// with a degenerate bounds interval for `N<=MN`.
pub fn check_lattice_edge(
    net: &Network,
    edge: &LatticeEdge,
    suites: &[TestSuite],
    reference: &TestSuite,
    patterns: Option<&PatternSet>,
) -> Result<EdgeVerdict, AnalysisError> {
    let mut verdict = EdgeVerdict::empty(edge);
    let Some(prepared) = prepare(net, edge, reference, patterns)? else {
        verdict.skipped_nets = 1;
        return Ok(verdict);
    };
    verdict.nets = 1;
    for (s, suite) in suites.iter().enumerate() {
        let m = suite_metrics(net, &prepared, suite)?;
        verdict.suites += 1;
        verdict.non_vacuous += usize::from(m.stronger_complete);
        if m.violates() && verdict.counterexample.is_none() {
            verdict.counterexample = Some(Counterexample {
                net: 0,
                suite: s,
                metrics: m,
                inputs: suite.inputs().to_vec(),
            });
        }
    }
    Ok(verdict)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatteryConfig {
    pub nets: usize,
    pub suites: usize,
    pub seed: u64,
    pub sections: usize,
    pub top: usize,
    pub pattern_limit: usize,
    /// Random inputs per suite are drawn from `1..=max_suite_size`.
    pub max_suite_size: usize,
    pub reference_size: usize,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            nets: 50,
            suites: 20,
            seed: 0,
            sections: 2,
            top: 1,
            pattern_limit: 10,
            max_suite_size: 24,
            reference_size: 16,
        }
    }
}

/// A small random network on `[-1, 1]^n`: 2 or 3 inputs, two or three
/// hidden layers of 2 or 3 nodes, 2 outputs.
pub fn random_battery_net<R: Rng + ?Sized>(rng: &mut R) -> Network {
    let mut sizes = vec![rng.random_range(2..=3)];
    for _ in 0..rng.random_range(2..=3) {
        sizes.push(rng.random_range(2..=3));
    }
    sizes.push(2);
    let dim = sizes[0];
    Network::random(&sizes, 1.0, rng)
        .with_input_domain(Some(vec![Interval::new(-1.0, 1.0); dim]))
        .expect("domain matches the input size")
}

fn random_inputs<R: Rng + ?Sized>(net: &Network, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            (0..net.input_dim())
                .map(|_| rng.random_range(-1.0..=1.0))
                .collect()
        })
        .collect()
}

/// Checks `edges` over `config.nets` random networks with `config.suites`
/// suites each. Odd-numbered suites also contain one witness per feasible
/// activation pattern (when the network is small enough to enumerate), so
/// that safety coverage is complete on them; every fourth suite contains the
/// reference inputs. Results only depend on the configuration.
pub fn run_lattice_battery(
    edges: &[EdgeKind],
    config: &BatteryConfig,
) -> Result<Vec<EdgeVerdict>, AnalysisError> {
    let lattice_edges: Vec<LatticeEdge> = edges
        .iter()
        .map(|&kind| LatticeEdge {
            kind,
            sections: config.sections,
            top: config.top,
            pattern_limit: config.pattern_limit,
        })
        .collect();
    let per_net: Vec<Vec<EdgeVerdict>> = (0..config.nets)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(i as u64));
            let net = random_battery_net(&mut rng);
            let reference =
                TestSuite::new(random_inputs(&net, config.reference_size.max(1), &mut rng));
            let patterns = if net.hidden_count() <= config.pattern_limit {
                Some(enumerate_patterns(&net, config.pattern_limit)?)
            } else {
                None
            };
            let witnesses: Vec<Vec<f64>> = patterns
                .iter()
                .flat_map(|p| p.feasible().filter_map(|(_, e)| e.witness.clone()))
                .collect();
            let suites: Vec<TestSuite> = (0..config.suites)
                .map(|s| {
                    let n = rng.random_range(1..=config.max_suite_size.max(1));
                    let mut inputs = random_inputs(&net, n, &mut rng);
                    if s % 2 == 1 {
                        inputs.extend(witnesses.iter().cloned());
                    }
                    if s % 4 == 2 {
                        inputs.extend(reference.inputs().iter().cloned());
                    }
                    TestSuite::new(inputs)
                })
                .collect();
            lattice_edges
                .iter()
                .map(|edge| {
                    let mut v =
                        check_lattice_edge(&net, edge, &suites, &reference, patterns.as_ref())?;
                    if let Some(c) = &mut v.counterexample {
                        c.net = i;
                    }
                    Ok(v)
                })
                .collect::<Result<Vec<_>, AnalysisError>>()
        })
        .collect::<Result<_, AnalysisError>>()?;
    let mut verdicts: Vec<EdgeVerdict> = lattice_edges.iter().map(EdgeVerdict::empty).collect();
    for net_verdicts in per_net {
        for (total, v) in verdicts.iter_mut().zip(net_verdicts) {
            total.merge(v);
        }
    }
    Ok(verdicts)
}
