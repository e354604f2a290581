//! Presolve: bound tightening from singleton rows, removal of fixed
//! variables and elimination of free variables through equality rows.

use std::collections::BTreeSet;

use super::problem::{Cmp, LinearProgram, Row};

/// Reduced problem handed to the simplex. Rows are scaled so that their
/// largest coefficient has magnitude 1.
#[derive(Debug, Clone)]
pub(crate) struct ReducedProblem {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cost: Vec<f64>,
    pub start: Vec<f64>,
    pub rows: Vec<Row>,
}

struct Elimination {
    var: usize,
    pivot: f64,
    /// Remaining terms of the equality row, excluding `var`.
    terms: Vec<(usize, f64)>,
    rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Active,
    Fixed(f64),
    Eliminated,
}

pub(crate) struct Reduced {
    pub problem: ReducedProblem,
    n_original: usize,
    /// Compact index -> original index.
    kept: Vec<usize>,
    states: Vec<VarState>,
    eliminations: Vec<Elimination>,
}

impl Reduced {
    /// Position of original variable `j` in the reduced problem.
    pub fn compact_index(&self, j: usize) -> Option<usize> {
        self.kept.binary_search(&j).ok()
    }

    pub fn postsolve(&self, reduced_x: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_original];
        for (c, &j) in self.kept.iter().enumerate() {
            x[j] = reduced_x[c];
        }
        for (j, s) in self.states.iter().enumerate() {
            if let VarState::Fixed(v) = s {
                x[j] = *v;
            }
        }
        for e in self.eliminations.iter().rev() {
            let rest: f64 = e.terms.iter().map(|&(k, a)| a * x[k]).sum();
            x[e.var] = (e.rhs - rest) / e.pivot;
        }
        x
    }
}

pub(crate) enum Presolved {
    Infeasible,
    Reduced(Reduced),
}

const DROP_TOL: f64 = 1e-15;

fn feasibility_slack(v: f64) -> f64 {
    1e-9 * (1.0 + v.abs())
}

struct Work {
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    states: Vec<VarState>,
    rows: Vec<Option<Row>>,
    col_rows: Vec<BTreeSet<usize>>,
    eliminations: Vec<Elimination>,
    protected: Vec<bool>,
}

impl Work {
    fn is_free(&self, j: usize) -> bool {
        self.states[j] == VarState::Active
            && !self.protected[j]
            && self.lower[j] == f64::NEG_INFINITY
            && self.upper[j] == f64::INFINITY
    }

    fn push_row(&mut self, row: Row) {
        let r = self.rows.len();
        for &(j, _) in &row.terms {
            self.col_rows[j].insert(r);
        }
        self.rows.push(Some(row));
    }

    fn remove_row(&mut self, r: usize) {
        if let Some(row) = self.rows[r].take() {
            for (j, _) in row.terms {
                self.col_rows[j].remove(&r);
            }
        }
    }

    /// Substitutes a fixed value for `j` everywhere.
    fn fix(&mut self, j: usize, value: f64) {
        self.states[j] = VarState::Fixed(value);
        self.lower[j] = value;
        self.upper[j] = value;
        let rows: Vec<usize> = std::mem::take(&mut self.col_rows[j]).into_iter().collect();
        for r in rows {
            let row = self.rows[r]
                .as_mut()
                .expect("column lists only reference live rows");
            if let Some(pos) = row.terms.iter().position(|&(k, _)| k == j) {
                let (_, a) = row.terms.remove(pos);
                row.rhs -= a * value;
            }
        }
    }

    /// Applies a singleton or empty row. Returns false on infeasibility.
    fn absorb_short_row(&mut self, r: usize) -> Result<bool, ()> {
        let row = self.rows[r].as_ref().expect("live row");
        match row.terms.len() {
            0 => {
                let ok = match row.cmp {
                    Cmp::Le => 0.0 <= row.rhs + feasibility_slack(row.rhs),
                    Cmp::Ge => 0.0 >= row.rhs - feasibility_slack(row.rhs),
                    Cmp::Eq => row.rhs.abs() <= feasibility_slack(row.rhs),
                };
                if !ok {
                    return Err(());
                }
                self.rows[r] = None;
                Ok(true)
            }
            1 => {
                let (j, a) = row.terms[0];
                let bound = row.rhs / a;
                let cmp = match (row.cmp, a > 0.0) {
                    (Cmp::Eq, _) => Cmp::Eq,
                    (c, true) => c,
                    (Cmp::Le, false) => Cmp::Ge,
                    (Cmp::Ge, false) => Cmp::Le,
                };
                if matches!(cmp, Cmp::Le | Cmp::Eq) {
                    self.upper[j] = self.upper[j].min(bound);
                }
                if matches!(cmp, Cmp::Ge | Cmp::Eq) {
                    self.lower[j] = self.lower[j].max(bound);
                }
                self.remove_row(r);
                let (lo, hi) = (self.lower[j], self.upper[j]);
                if lo > hi {
                    if lo - hi > feasibility_slack(lo.max(hi)) {
                        return Err(());
                    }
                    let mid = 0.5 * (lo + hi);
                    self.lower[j] = mid;
                    self.upper[j] = mid;
                }
                if self.lower[j] == self.upper[j] && !self.protected[j] {
                    self.fix(j, self.lower[j]);
                }
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    /// Eliminates free variable `j` using equality row `r`.
    fn eliminate(&mut self, r: usize, j: usize) {
        let pivot_row = self.rows[r].take().expect("live row");
        for &(k, _) in &pivot_row.terms {
            self.col_rows[k].remove(&r);
        }
        let pivot = pivot_row
            .terms
            .iter()
            .find(|&&(k, _)| k == j)
            .expect("pivot present")
            .1;
        let others: Vec<(usize, f64)> = pivot_row
            .terms
            .iter()
            .copied()
            .filter(|&(k, _)| k != j)
            .collect();

        let targets: Vec<usize> = std::mem::take(&mut self.col_rows[j]).into_iter().collect();
        for t in targets {
            let row = self.rows[t].as_mut().expect("live row");
            let coef = row
                .terms
                .iter()
                .find(|&&(k, _)| k == j)
                .map(|&(_, a)| a)
                .unwrap_or(0.0);
            let factor = coef / pivot;
            let before: BTreeSet<usize> = row.terms.iter().map(|&(k, _)| k).collect();
            let mut merged = merge(&row.terms, &others, -factor);
            merged.retain(|&(k, _)| k != j);
            row.terms = merged;
            row.rhs -= factor * pivot_row.rhs;
            let after: BTreeSet<usize> = row.terms.iter().map(|&(k, _)| k).collect();
            for k in before.difference(&after) {
                self.col_rows[*k].remove(&t);
            }
            for k in after.difference(&before) {
                self.col_rows[*k].insert(t);
            }
        }
        let cj = self.cost[j];
        if cj != 0.0 {
            let factor = cj / pivot;
            for &(k, a) in &others {
                self.cost[k] -= factor * a;
            }
            self.cost[j] = 0.0;
        }
        self.states[j] = VarState::Eliminated;
        // x_j = (rhs - others) / pivot must stay inside [lo_j, hi_j].
        let (lo, hi) = (self.lower[j], self.upper[j]);
        for (bound, is_lower) in [(lo, true), (hi, false)] {
            if bound.is_finite() && !others.is_empty() {
                let cmp = if is_lower == (pivot > 0.0) {
                    Cmp::Le
                } else {
                    Cmp::Ge
                };
                self.push_row(Row {
                    terms: others.clone(),
                    cmp,
                    rhs: pivot_row.rhs - pivot * bound,
                });
            }
        }
        self.eliminations.push(Elimination {
            var: j,
            pivot,
            terms: others,
            rhs: pivot_row.rhs,
        });
    }

    /// Picks the equality row and free variable with the smallest fill estimate.
    /// With `bounded`, variables with finite bounds qualify too; their bounds
    /// then survive as rows over the remaining variables.
    fn best_elimination(&self, bounded: bool) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, usize)> = None;
        for (r, row) in self.rows.iter().enumerate() {
            let Some(row) = row else { continue };
            if row.cmp != Cmp::Eq || row.terms.len() < 2 {
                continue;
            }
            let max_abs = row.terms.iter().map(|&(_, a)| a.abs()).fold(0.0, f64::max);
            for &(j, a) in &row.terms {
                let eligible = if bounded {
                    self.states[j] == VarState::Active && !self.protected[j]
                } else {
                    self.is_free(j)
                };
                if !eligible || a.abs() < 0.01 * max_abs {
                    continue;
                }
                let score = (row.terms.len() - 1) * (self.col_rows[j].len() - 1);
                if best.is_none_or(|(s, _, _)| score < s) {
                    best = Some((score, r, j));
                }
            }
        }
        best.map(|(_, r, j)| (r, j))
    }
}

/// Sparse `a + f * b` over sorted term lists.
fn merge(a: &[(usize, f64)], b: &[(usize, f64)], f: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut k) = (0, 0);
    while i < a.len() || k < b.len() {
        let take_a = k >= b.len() || (i < a.len() && a[i].0 < b[k].0);
        let take_b = i >= a.len() || (k < b.len() && b[k].0 < a[i].0);
        let (j, v, scale) = if take_a {
            i += 1;
            (a[i - 1].0, a[i - 1].1, a[i - 1].1.abs())
        } else if take_b {
            k += 1;
            (b[k - 1].0, f * b[k - 1].1, (f * b[k - 1].1).abs())
        } else {
            let v = a[i].1 + f * b[k].1;
            let scale = a[i].1.abs().max((f * b[k].1).abs());
            i += 1;
            k += 1;
            (a[i - 1].0, v, scale)
        };
        if v.abs() > DROP_TOL * scale {
            out.push((j, v));
        }
    }
    out
}

fn normalise(terms: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut t: Vec<(usize, f64)> = terms.iter().copied().filter(|&(_, a)| a != 0.0).collect();
    t.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(t.len());
    for (j, a) in t {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

/// `protected` variables are never fixed or eliminated, so their bounds can
/// still be tightened on the reduced problem.
pub(crate) fn presolve(lp: &LinearProgram, protected: &[bool]) -> Presolved {
    let n = lp.num_vars();
    let mut w = Work {
        lower: lp.lower.clone(),
        upper: lp.upper.clone(),
        cost: lp.cost.clone(),
        states: vec![VarState::Active; n],
        rows: Vec::with_capacity(lp.rows.len()),
        col_rows: vec![BTreeSet::new(); n],
        eliminations: Vec::new(),
        protected: (0..n)
            .map(|j| protected.get(j).copied().unwrap_or(false))
            .collect(),
    };
    for j in 0..n {
        if w.lower[j] > w.upper[j] {
            return Presolved::Infeasible;
        }
    }
    for (r, row) in lp.rows.iter().enumerate() {
        let terms = normalise(&row.terms);
        for &(j, _) in &terms {
            w.col_rows[j].insert(r);
        }
        w.rows.push(Some(Row {
            terms,
            cmp: row.cmp,
            rhs: row.rhs,
        }));
    }
    for j in 0..n {
        if w.lower[j] == w.upper[j] && !w.protected[j] {
            w.fix(j, w.lower[j]);
        }
    }
    loop {
        let mut changed = false;
        for r in 0..w.rows.len() {
            if w.rows[r].is_some() {
                match w.absorb_short_row(r) {
                    Err(()) => return Presolved::Infeasible,
                    Ok(c) => changed |= c,
                }
            }
        }
        if let Some((r, j)) = w
            .best_elimination(false)
            .or_else(|| w.best_elimination(true))
        {
            w.eliminate(r, j);
            changed = true;
        }
        if !changed {
            break;
        }
    }

    let kept: Vec<usize> = (0..n)
        .filter(|&j| w.states[j] == VarState::Active)
        .collect();
    let mut compact = vec![usize::MAX; n];
    for (c, &j) in kept.iter().enumerate() {
        compact[j] = c;
    }
    let rows: Vec<Row> = w
        .rows
        .iter()
        .flatten()
        .map(|row| {
            let scale = row.terms.iter().map(|&(_, a)| a.abs()).fold(0.0, f64::max);
            let s = if scale > 0.0 { 1.0 / scale } else { 1.0 };
            Row {
                terms: row
                    .terms
                    .iter()
                    .map(|&(j, a)| (compact[j], a * s))
                    .collect(),
                cmp: row.cmp,
                rhs: row.rhs * s,
            }
        })
        .collect();
    let start = kept
        .iter()
        .map(|&j| {
            let (lo, hi) = (w.lower[j], w.upper[j]);
            match lp.hint[j] {
                Some(h) => h.max(lo).min(hi),
                None if lo.is_finite() => lo,
                None if hi.is_finite() => hi,
                None => 0.0,
            }
        })
        .collect();
    let problem = ReducedProblem {
        lower: kept.iter().map(|&j| w.lower[j]).collect(),
        upper: kept.iter().map(|&j| w.upper[j]).collect(),
        cost: kept.iter().map(|&j| w.cost[j]).collect(),
        start,
        rows,
    };
    Presolved::Reduced(Reduced {
        problem,
        n_original: n,
        kept,
        states: w.states,
        eliminations: w.eliminations,
    })
}
