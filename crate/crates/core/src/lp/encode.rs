//! Linear model of a network instance under a fixed (partial) activation
//! pattern, plus the test-condition and distance constraints used by the
//! concolic engine.

use std::fmt::{self, Write as _};

use super::problem::{solve_lp, Cmp, LinearProgram, Prepared, SolverOptions, Status};
use super::LpError;
use crate::coverage::{section_bounds, CoveringMethod, NeuronBounds, Orientation, ValueFunction};
use crate::features::FeaturePair;
use crate::network::{ActivationTrace, Interval, Network, NodeId, Sign};

/// Relative width at which the distance bisection stops.
pub const LINF_TOLERANCE: f64 = 1e-9;

/// Default strictness for `u < 0`, realised as `u <= -delta`.
pub const DEFAULT_DELTA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    pub delta: f64,
    /// Extra slack on active nodes, `u >= margin`. Zero keeps the exact
    /// pattern region; a small positive value guards the re-evaluated point
    /// against rounding onto the wrong side of 0.
    pub margin: f64,
    /// Emit the input domain as explicit rows instead of variable bounds.
    pub domain_as_rows: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            delta: DEFAULT_DELTA,
            margin: 0.0,
            domain_as_rows: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `u = b + W v_prev`.
    Affine,
    /// `u >= 0` or `u <= -delta`.
    Sign,
    /// `v = u` or `v = 0`.
    Activation,
    Domain,
    Distance,
    Condition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
    pub kind: ConstraintKind,
}

#[derive(Debug, Clone, PartialEq)]
struct LayerEnc {
    /// First variable of the layer; node `i` has `u` at `first + 2(i-1)` and,
    /// for hidden layers, `v` right after it.
    first: usize,
    size: usize,
    hidden: bool,
    /// `affine[i]` = terms over the previous layer's post variables and bias.
    affine: Vec<(Vec<(usize, f64)>, f64)>,
    /// Required sign per node; `None` leaves the node unconstrained.
    signs: Vec<Option<Sign>>,
}

/// Variables are laid out as `x_1..x_{s1}`, then `u, v` per encoded node in
/// layer-major order, then `t` when an objective is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    input_dim: usize,
    depth: usize,
    options: ModelOptions,
    domain: Option<Vec<Interval>>,
    layers: Vec<LayerEnc>,
    num_vars: usize,
    extra: Vec<Constraint>,
    /// `(t, seed)` when the distance objective is attached.
    objective: Option<(usize, Vec<f64>)>,
    /// Seed values of the encoded `u` variables, used as a starting point.
    seed_u: Vec<Vec<f64>>,
    seed_x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    /// Input part of the assignment (empty unless a point was found).
    pub x2: Vec<f64>,
    /// Value of `t`, or 0 for models without the distance objective.
    pub objective: f64,
    pub iterations: usize,
    /// Full assignment in model variable order.
    pub values: Vec<f64>,
    pub max_violation: f64,
}

/// Pattern model of `trace` encoding layers `2..=depth`.
pub fn build_pattern_model(
    net: &Network,
    trace: &ActivationTrace,
    depth: usize,
    options: &ModelOptions,
) -> Result<LpModel, LpError> {
    if trace.fingerprint() != net.fingerprint() {
        return Err(LpError::ForeignTrace);
    }
    check_depth(net, depth)?;
    let signs: Vec<Vec<Sign>> = (2..=depth)
        .map(|k| {
            (1..=net.layer_size(k))
                .map(|i| trace.sign_unchecked(NodeId::new(k, i)))
                .collect()
        })
        .collect();
    let mut model = build(net, &signs, depth, options)?;
    model.seed_x = trace.input().to_vec();
    model.seed_u = (2..=depth).map(|k| trace.pre_layer(k).to_vec()).collect();
    Ok(model)
}

/// Model of an explicit sign vector over layers `2..=depth`, flattened in
/// layer-major order.
pub fn build_sign_model(
    net: &Network,
    signs: &[Sign],
    depth: usize,
    options: &ModelOptions,
) -> Result<LpModel, LpError> {
    check_depth(net, depth)?;
    let expected: usize = (2..=depth).map(|k| net.layer_size(k)).sum();
    if signs.len() != expected {
        return Err(LpError::PatternLength {
            expected,
            actual: signs.len(),
        });
    }
    let mut nested = Vec::new();
    let mut off = 0;
    for k in 2..=depth {
        let s = net.layer_size(k);
        nested.push(signs[off..off + s].to_vec());
        off += s;
    }
    build(net, &nested, depth, options)
}

fn check_depth(net: &Network, depth: usize) -> Result<(), LpError> {
    if depth < 2 || depth > net.depth() {
        return Err(LpError::BadDepth {
            depth,
            max: net.depth(),
        });
    }
    Ok(())
}

fn build(
    net: &Network,
    signs: &[Vec<Sign>],
    depth: usize,
    options: &ModelOptions,
) -> Result<LpModel, LpError> {
    if !(options.delta.is_finite() && options.delta >= 0.0) {
        return Err(LpError::BadDelta(options.delta));
    }
    if !(options.margin.is_finite() && options.margin >= 0.0) {
        return Err(LpError::BadDelta(options.margin));
    }
    let input_dim = net.input_dim();
    let mut next = input_dim;
    let mut prev_post: Vec<usize> = (0..input_dim).collect();
    let mut layers = Vec::new();
    for k in 2..=depth {
        let size = net.layer_size(k);
        let hidden = k < net.depth();
        let stride = if hidden { 2 } else { 1 };
        let first = next;
        next += stride * size;
        let dense = net.layer(k - 1);
        let affine = (0..size)
            .map(|i| {
                let terms = prev_post
                    .iter()
                    .enumerate()
                    .map(|(h, &var)| (var, dense.weight(h, i)))
                    .filter(|&(_, w)| w != 0.0)
                    .collect();
                (terms, dense.biases()[i])
            })
            .collect();
        prev_post = (0..size).map(|i| first + stride * i + stride - 1).collect();
        layers.push(LayerEnc {
            first,
            size,
            hidden,
            affine,
            signs: signs[k - 2].iter().map(|&s| Some(s)).collect(),
        });
    }
    Ok(LpModel {
        input_dim,
        depth,
        options: *options,
        domain: net.input_domain().map(|d| d.to_vec()),
        layers,
        num_vars: next,
        extra: Vec::new(),
        objective: None,
        seed_u: Vec::new(),
        seed_x: Vec::new(),
    })
}

impl LpModel {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn delta(&self) -> f64 {
        self.options.delta
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints().len()
    }

    pub fn input_var(&self, i: usize) -> usize {
        assert!(i >= 1 && i <= self.input_dim, "input index out of range");
        i - 1
    }

    fn layer_enc(&self, node: NodeId) -> Option<&LayerEnc> {
        if node.layer < 2 || node.layer > self.depth {
            return None;
        }
        let l = &self.layers[node.layer - 2];
        (node.index >= 1 && node.index <= l.size).then_some(l)
    }

    pub fn u_var(&self, node: NodeId) -> Option<usize> {
        let l = self.layer_enc(node)?;
        Some(l.first + if l.hidden { 2 } else { 1 } * (node.index - 1))
    }

    /// `v` variable of an encoded hidden node.
    pub fn v_var(&self, node: NodeId) -> Option<usize> {
        let l = self.layer_enc(node)?;
        l.hidden.then(|| l.first + 2 * (node.index - 1) + 1)
    }

    pub fn t_var(&self) -> Option<usize> {
        self.objective.as_ref().map(|(t, _)| *t)
    }

    /// Sign currently required of an encoded node.
    pub fn sign_of(&self, node: NodeId) -> Option<Sign> {
        self.layer_enc(node).and_then(|l| l.signs[node.index - 1])
    }

    pub fn var_name(&self, var: usize) -> String {
        if var < self.input_dim {
            return format!("x_{}", var + 1);
        }
        if Some(var) == self.t_var() {
            return "t".into();
        }
        for (li, l) in self.layers.iter().enumerate() {
            let stride = if l.hidden { 2 } else { 1 };
            if var >= l.first && var < l.first + stride * l.size {
                let off = var - l.first;
                let kind = if off % stride == 0 { "u" } else { "v" };
                return format!("{kind}_{}_{}", li + 2, off / stride + 1);
            }
        }
        format!("z_{var}")
    }

    fn set_sign(&mut self, node: NodeId, sign: Option<Sign>) {
        let l = &mut self.layers[node.layer - 2];
        l.signs[node.index - 1] = sign;
    }

    /// Every constraint of the model in a fixed order: per layer the affine
    /// definitions, sign rows and activation rows, then domain, distance and
    /// condition rows.
    pub fn constraints(&self) -> Vec<Constraint> {
        let delta = self.options.delta;
        let margin = self.options.margin;
        let mut out = Vec::new();
        for l in &self.layers {
            let stride = if l.hidden { 2 } else { 1 };
            for (i, (terms, bias)) in l.affine.iter().enumerate() {
                let mut t = vec![(l.first + stride * i, 1.0)];
                t.extend(terms.iter().map(|&(v, w)| (v, -w)));
                out.push(Constraint {
                    terms: t,
                    cmp: Cmp::Eq,
                    rhs: *bias,
                    kind: ConstraintKind::Affine,
                });
            }
            for (i, s) in l.signs.iter().enumerate() {
                let u = l.first + stride * i;
                match s {
                    Some(Sign::Positive) => out.push(Constraint {
                        terms: vec![(u, 1.0)],
                        cmp: Cmp::Ge,
                        rhs: margin,
                        kind: ConstraintKind::Sign,
                    }),
                    Some(Sign::Negative) => out.push(Constraint {
                        terms: vec![(u, 1.0)],
                        cmp: Cmp::Le,
                        rhs: -delta,
                        kind: ConstraintKind::Sign,
                    }),
                    None => {}
                }
            }
            if l.hidden {
                for (i, s) in l.signs.iter().enumerate() {
                    let (u, v) = (l.first + 2 * i, l.first + 2 * i + 1);
                    match s {
                        Some(Sign::Positive) => out.push(Constraint {
                            terms: vec![(v, 1.0), (u, -1.0)],
                            cmp: Cmp::Eq,
                            rhs: 0.0,
                            kind: ConstraintKind::Activation,
                        }),
                        Some(Sign::Negative) => out.push(Constraint {
                            terms: vec![(v, 1.0)],
                            cmp: Cmp::Eq,
                            rhs: 0.0,
                            kind: ConstraintKind::Activation,
                        }),
                        None => {}
                    }
                }
            }
        }
        if self.options.domain_as_rows {
            if let Some(domain) = &self.domain {
                for (i, iv) in domain.iter().enumerate() {
                    out.push(Constraint {
                        terms: vec![(i, 1.0)],
                        cmp: Cmp::Ge,
                        rhs: iv.lo,
                        kind: ConstraintKind::Domain,
                    });
                    out.push(Constraint {
                        terms: vec![(i, 1.0)],
                        cmp: Cmp::Le,
                        rhs: iv.hi,
                        kind: ConstraintKind::Domain,
                    });
                }
            }
        }
        if let Some((t, seed)) = &self.objective {
            for (i, &s) in seed.iter().enumerate() {
                out.push(Constraint {
                    terms: vec![(i, 1.0), (*t, -1.0)],
                    cmp: Cmp::Le,
                    rhs: s,
                    kind: ConstraintKind::Distance,
                });
                out.push(Constraint {
                    terms: vec![(i, 1.0), (*t, 1.0)],
                    cmp: Cmp::Ge,
                    rhs: s,
                    kind: ConstraintKind::Distance,
                });
            }
        }
        out.extend(self.extra.iter().cloned());
        out
    }

    /// Variable bounds: the input domain (unless emitted as rows) and `t >= 0`.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(f64::NEG_INFINITY, f64::INFINITY); self.num_vars];
        if !self.options.domain_as_rows {
            if let Some(domain) = &self.domain {
                for (i, iv) in domain.iter().enumerate() {
                    b[i] = (iv.lo, iv.hi);
                }
            }
        }
        if let Some(t) = self.t_var() {
            b[t] = (0.0, f64::INFINITY);
        }
        b
    }

    pub fn to_linear_program(&self) -> LinearProgram {
        let mut lp = LinearProgram::new();
        for (lo, hi) in self.bounds() {
            lp.add_var(lo, hi);
        }
        if let Some(t) = self.t_var() {
            lp.cost[t] = 1.0;
        }
        for (i, &x) in self.seed_x.iter().enumerate() {
            lp.hint[i] = Some(x);
        }
        for (l, seed) in self.layers.iter().zip(&self.seed_u) {
            let stride = if l.hidden { 2 } else { 1 };
            for (i, &u) in seed.iter().enumerate() {
                lp.hint[l.first + stride * i] = Some(u);
                if l.hidden {
                    lp.hint[l.first + 2 * i + 1] = Some(u.max(0.0));
                }
            }
        }
        for c in self.constraints() {
            lp.add_row(c.terms, c.cmp, c.rhs);
        }
        lp
    }

    /// Solves the model. Without an objective this is a single feasibility
    /// solve. With the distance objective, `t` is found by bisection over
    /// feasibility problems in which `|x_i - x1_i| <= t` become variable
    /// bounds; see [`LINF_TOLERANCE`].
    pub fn solve(&self, opts: &SolverOptions) -> LpSolution {
        match &self.objective {
            None => {
                let s = solve_lp(&self.to_linear_program(), opts);
                let x2 = if s.x.is_empty() {
                    Vec::new()
                } else {
                    s.x[..self.input_dim].to_vec()
                };
                let objective = if s.x.is_empty() { f64::NAN } else { 0.0 };
                LpSolution {
                    status: s.status,
                    x2,
                    objective,
                    iterations: s.iterations,
                    values: s.x,
                    max_violation: s.max_violation,
                }
            }
            Some((t, seed)) => self.solve_linf(*t, seed, opts),
        }
    }

    /// Solves the model with the distance rows and `t` included, in one
    /// simplex run. Exact but slow on wide inputs; kept for cross-checks.
    pub fn solve_direct(&self, opts: &SolverOptions) -> LpSolution {
        let s = solve_lp(&self.to_linear_program(), opts);
        let x2 = if s.x.is_empty() {
            Vec::new()
        } else {
            s.x[..self.input_dim].to_vec()
        };
        let objective = match (self.t_var(), s.x.is_empty()) {
            (Some(t), false) => s.x[t],
            (None, false) => 0.0,
            (_, true) => f64::NAN,
        };
        LpSolution {
            status: s.status,
            x2,
            objective,
            iterations: s.iterations,
            values: s.x,
            max_violation: s.max_violation,
        }
    }

    fn solve_linf(&self, t: usize, seed: &[f64], opts: &SolverOptions) -> LpSolution {
        let mut inner = self.clone();
        inner.objective = None;
        inner.num_vars -= 1;
        let base = inner.to_linear_program();
        let protected: Vec<bool> = (0..base.num_vars()).map(|j| j < self.input_dim).collect();
        let prepared = Prepared::new(&base, &protected);
        let mut iterations = 0;
        let run = |radius: f64, iterations: &mut usize| {
            let boxes: Vec<(usize, f64, f64)> = seed
                .iter()
                .enumerate()
                .map(|(i, &c)| (i, c - radius, c + radius))
                .collect();
            let budget = SolverOptions {
                max_iterations: opts.max_iterations.saturating_sub(*iterations),
                ..*opts
            };
            let s = prepared.solve_in_box(&boxes, &budget);
            *iterations += s.iterations;
            s
        };
        let dist = |x: &[f64]| {
            seed.iter()
                .zip(x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let failed = |status: Status, iterations: usize| LpSolution {
            status,
            x2: Vec::new(),
            objective: f64::NAN,
            iterations,
            values: Vec::new(),
            max_violation: f64::NAN,
        };

        let first = run(f64::INFINITY, &mut iterations);
        if first.status != Status::Optimal {
            return failed(first.status, iterations);
        }
        let mut best = first.x;
        let mut hi = dist(&best[..self.input_dim]);
        let mut lo = 0.0;
        while hi - lo > LINF_TOLERANCE * hi.max(1.0) {
            let mid = if lo == 0.0 && hi > 1.0 {
                hi.min(lo + 1.0) * 0.5
            } else {
                0.5 * (lo + hi)
            };
            match run(mid, &mut iterations) {
                s if s.status == Status::Optimal => {
                    // The point may sit a feasibility tolerance outside the box.
                    hi = hi.min(mid).min(dist(&s.x[..self.input_dim]));
                    best = s.x;
                }
                s if s.status == Status::IterationLimit => return failed(s.status, iterations),
                _ => lo = mid,
            }
        }
        let objective = dist(&best[..self.input_dim]);
        let mut values = best;
        values.insert(t, objective);
        let max_violation = self.to_linear_program().max_violation(&values);
        LpSolution {
            status: Status::Optimal,
            x2: values[..self.input_dim].to_vec(),
            objective,
            iterations,
            values,
            max_violation,
        }
    }

    /// Human-readable LP text: objective, one constraint per line, bounds.
    pub fn to_lp_text(&self) -> String {
        let mut s = String::new();
        let term = |s: &mut String, first: bool, a: f64, name: &str| {
            let sign = if a < 0.0 {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            let mag = a.abs();
            let sep = if first { "" } else { " " };
            if mag == 1.0 {
                let _ = write!(
                    s,
                    "{sep}{sign}{}{name}",
                    if sign.is_empty() || first { "" } else { " " }
                );
            } else {
                let _ = write!(
                    s,
                    "{sep}{sign}{}{mag} {name}",
                    if sign.is_empty() || first { "" } else { " " }
                );
            }
        };
        s.push_str("minimize\n obj: ");
        match self.t_var() {
            Some(t) => s.push_str(&self.var_name(t)),
            None => s.push('0'),
        }
        s.push_str("\nsubject to\n");
        for (ci, c) in self.constraints().iter().enumerate() {
            let _ = write!(s, " c{}: ", ci + 1);
            if c.terms.is_empty() {
                s.push('0');
            }
            for (n, &(v, a)) in c.terms.iter().enumerate() {
                term(&mut s, n == 0, a, &self.var_name(v));
            }
            let _ = writeln!(s, " {} {}", c.cmp.symbol(), c.rhs);
        }
        s.push_str("bounds\n");
        for (v, (lo, hi)) in self.bounds().into_iter().enumerate() {
            let name = self.var_name(v);
            match (lo.is_finite(), hi.is_finite()) {
                (false, false) => {
                    let _ = writeln!(s, " {name} free");
                }
                (true, false) => {
                    let _ = writeln!(s, " {name} >= {lo}");
                }
                (false, true) => {
                    let _ = writeln!(s, " -inf <= {name} <= {hi}");
                }
                (true, true) => {
                    let _ = writeln!(s, " {lo} <= {name} <= {hi}");
                }
            }
        }
        s.push_str("end\n");
        s
    }
}

impl fmt::Display for LpModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_lp_text())
    }
}

/// Adds `t >= 0` and `-t <= x_i - x1_i <= t`; the objective becomes `min t`.
pub fn add_linf_objective(model: &LpModel, x1: &[f64]) -> Result<LpModel, LpError> {
    if x1.len() != model.input_dim {
        return Err(LpError::Dimension {
            expected: model.input_dim,
            actual: x1.len(),
        });
    }
    let mut m = model.clone();
    let t = match m.objective.take() {
        Some((t, _)) => t,
        None => {
            m.num_vars += 1;
            m.num_vars - 1
        }
    };
    m.objective = Some((t, x1.to_vec()));
    Ok(m)
}

/// Rewrites `model` so that its solutions, paired with the seed `trace`,
/// satisfy `method` on `pair`. Nodes of the decision layer outside the
/// decision feature are left unconstrained.
pub fn add_test_condition(
    model: &LpModel,
    pair: &FeaturePair,
    method: &CoveringMethod,
    trace: &ActivationTrace,
    bounds: Option<&NeuronBounds>,
) -> Result<LpModel, LpError> {
    let dec_layer = pair.decision.layer();
    if model.depth != dec_layer {
        return Err(LpError::DepthMismatch {
            model: model.depth,
            decision: dec_layer,
        });
    }
    if trace.depth() < dec_layer || trace.input().len() != model.input_dim {
        return Err(LpError::ForeignTrace);
    }
    method.check(pair, bounds)?;
    for g in [method.condition_function(), method.decision_function()]
        .into_iter()
        .flatten()
    {
        if !g.is_linearizable() {
            return Err(LpError::NotLinearizable(g.name()));
        }
    }
    if let Some(b) = bounds {
        if b.fingerprint() != trace.fingerprint() {
            return Err(LpError::Coverage(
                crate::coverage::CoverageError::StaleBounds,
            ));
        }
    }
    let mut m = model.clone();
    if method.flips_condition() {
        for n in pair.condition.nodes() {
            m.set_sign(n, Some(trace.sign_unchecked(n).flipped()));
        }
    }
    for i in 1..=m.layers[dec_layer - 2].size {
        let n = NodeId::new(dec_layer, i);
        let sign = if !pair.decision.contains(i) {
            None
        } else if method.flips_decision() {
            Some(trace.sign_unchecked(n).flipped())
        } else {
            Some(trace.sign_unchecked(n))
        };
        m.set_sign(n, sign);
    }
    if let Some(g) = method.condition_function() {
        for c in value_rows(&m, g, pair.condition.nodes(), trace, bounds) {
            m.extra.push(c);
        }
    }
    if let Some(g) = method.decision_function() {
        for c in value_rows(&m, g, pair.decision.nodes(), trace, bounds) {
            m.extra.push(c);
        }
    }
    Ok(m)
}

/// Linear rows expressing `g(seed, x2)` on the given nodes.
fn value_rows(
    m: &LpModel,
    g: &ValueFunction,
    nodes: impl Iterator<Item = NodeId>,
    trace: &ActivationTrace,
    bounds: Option<&NeuronBounds>,
) -> Vec<Constraint> {
    let delta = m.options.delta;
    let margin = m.options.margin;
    // Every value row is tightened by the margin in its restrictive direction.
    let row = |terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64| {
        let rhs = match cmp {
            Cmp::Ge => rhs + margin,
            Cmp::Le => rhs - margin,
            Cmp::Eq => rhs,
        };
        Constraint {
            terms,
            cmp,
            rhs,
            kind: ConstraintKind::Condition,
        }
    };
    let impossible = || row(Vec::new(), Cmp::Ge, 1.0);
    let mut out = Vec::new();
    for n in nodes {
        let u = m.u_var(n).expect("feature nodes are encoded");
        let u1 = trace.u(n);
        let target = m.sign_of(n).unwrap_or(Sign::of(u1));
        match *g {
            ValueFunction::Unconstrained => {}
            ValueFunction::AbsChange { d } => match target {
                Sign::Positive => out.push(row(vec![(u, 1.0)], Cmp::Ge, u1 + d)),
                Sign::Negative => out.push(row(vec![(u, 1.0)], Cmp::Le, u1 - d)),
            },
            ValueFunction::RatioAtLeast {
                sigma,
                orientation: Orientation::Forward,
            } => {
                if u1 > 0.0 {
                    out.push(row(vec![(u, 1.0)], Cmp::Ge, sigma * u1));
                } else if u1 < 0.0 {
                    out.push(row(vec![(u, 1.0)], Cmp::Le, sigma * u1));
                } else {
                    out.push(impossible());
                }
            }
            ValueFunction::RatioAtLeast {
                sigma,
                orientation: Orientation::Reverse,
            } => match target {
                Sign::Positive => {
                    out.push(row(vec![(u, 1.0)], Cmp::Ge, delta));
                    out.push(row(vec![(u, 1.0)], Cmp::Le, u1 / sigma));
                }
                Sign::Negative => {
                    out.push(row(vec![(u, 1.0)], Cmp::Le, -delta));
                    out.push(row(vec![(u, 1.0)], Cmp::Ge, u1 / sigma));
                }
            },
            ValueFunction::UpperBound { d } => out.push(row(vec![(u, 1.0)], Cmp::Ge, d + delta)),
            ValueFunction::ExceedsRecordedMax => {
                let hi = bounds.expect("checked").get(n).1;
                let v = m.v_var(n).unwrap_or(u);
                out.push(row(vec![(v, 1.0)], Cmp::Ge, hi + delta));
            }
            ValueFunction::InSubsection { j, m: sections } => {
                let (lo, hi) = bounds.expect("checked").get(n);
                if !(hi > lo) {
                    out.push(impossible());
                    continue;
                }
                let (a, b) = section_bounds(lo, hi, j, sections);
                let v = m.v_var(n).unwrap_or(u);
                out.push(row(vec![(v, 1.0)], Cmp::Ge, a));
                let top = if j == sections {
                    b
                } else {
                    b - delta.max(1e-12 * (1.0 + b.abs()))
                };
                out.push(row(vec![(v, 1.0)], Cmp::Le, top));
            }
            ValueFunction::RelChange { .. }
            | ValueFunction::NormDistance { .. }
            | ValueFunction::RankAtMost { .. } => {
                unreachable!("rejected before encoding")
            }
        }
    }
    out
}
