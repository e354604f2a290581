//! Bounded-variable primal simplex.
//!
//! Every row `i` gets a logical `y_i = a_i . x` carrying the row bounds. The
//! basis is kept implicitly through the kernel `K = A[R, S]`, where `S` are
//! the basic structurals and `R` the rows whose logical is nonbasic. Only
//! `K^-1` is stored, so the dense work scales with the number of basic
//! structurals rather than the row count.

use super::presolve::ReducedProblem;
use super::problem::Cmp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

const NONE: usize = usize::MAX;
const PIVOT_TOL: f64 = 1e-9;
const RECOMPUTE_EVERY: usize = 30;
const BLAND_AFTER: usize = 50;

enum Step {
    /// The entering variable reaches its own opposite bound.
    Flip(f64),
    /// Basic variable `var` leaves at `bound` after a step of `theta`.
    Leave {
        theta: f64,
        var: usize,
        bound: f64,
    },
    Unbounded,
}

pub(crate) struct Simplex<'a> {
    p: &'a ReducedProblem,
    n: usize,
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    /// `1 / sqrt(1 + |a_j|^2)`, a static stand-in for steepest-edge weights.
    col_scale: Vec<f64>,
    row_lo: Vec<f64>,
    row_hi: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    s_list: Vec<usize>,
    s_pos: Vec<usize>,
    r_list: Vec<usize>,
    r_pos: Vec<usize>,
    /// Rows follow `s_list`, columns follow `r_list`.
    kinv: Vec<Vec<f64>>,
    tol: f64,
    opt_tol: f64,
    max_iter: usize,
    iters: usize,
    since_recompute: usize,
    degenerate: usize,
}

impl<'a> Simplex<'a> {
    pub fn new(p: &'a ReducedProblem, tol: f64, opt_tol: f64, max_iter: usize) -> Self {
        let n = p.lower.len();
        let m = p.rows.len();
        let mut cols = vec![Vec::new(); n];
        let mut row_lo = Vec::with_capacity(m);
        let mut row_hi = Vec::with_capacity(m);
        for (i, row) in p.rows.iter().enumerate() {
            for &(j, a) in &row.terms {
                cols[j].push((i, a));
            }
            let (lo, hi) = match row.cmp {
                Cmp::Le => (f64::NEG_INFINITY, row.rhs),
                Cmp::Ge => (row.rhs, f64::INFINITY),
                Cmp::Eq => (row.rhs, row.rhs),
            };
            row_lo.push(lo);
            row_hi.push(hi);
        }
        let x = p.start.clone();
        let col_scale = cols
            .iter()
            .map(|c| 1.0 / (1.0 + c.iter().map(|&(_, a)| a * a).sum::<f64>()).sqrt())
            .collect();
        let mut s = Simplex {
            p,
            n,
            m,
            cols,
            col_scale,
            row_lo,
            row_hi,
            x,
            y: vec![0.0; m],
            s_list: Vec::new(),
            s_pos: vec![NONE; n],
            r_list: Vec::new(),
            r_pos: vec![NONE; m],
            kinv: Vec::new(),
            tol,
            opt_tol,
            max_iter,
            iters: 0,
            since_recompute: 0,
            degenerate: 0,
        };
        s.recompute_logicals();
        s
    }

    pub fn iterations(&self) -> usize {
        self.iters
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    fn bounds(&self, v: usize) -> (f64, f64) {
        if v < self.n {
            (self.p.lower[v], self.p.upper[v])
        } else {
            (self.row_lo[v - self.n], self.row_hi[v - self.n])
        }
    }

    fn value(&self, v: usize) -> f64 {
        if v < self.n {
            self.x[v]
        } else {
            self.y[v - self.n]
        }
    }

    fn set_value(&mut self, v: usize, val: f64) {
        if v < self.n {
            self.x[v] = val;
        } else {
            self.y[v - self.n] = val;
        }
    }

    fn is_basic(&self, v: usize) -> bool {
        if v < self.n {
            self.s_pos[v] != NONE
        } else {
            self.r_pos[v - self.n] == NONE
        }
    }

    /// Phase-one cost of a basic variable: the gradient of its bound violation.
    fn infeasibility_cost(&self, v: usize) -> f64 {
        let (lo, hi) = self.bounds(v);
        let val = self.value(v);
        if val < lo - self.tol {
            -1.0
        } else if val > hi + self.tol {
            1.0
        } else {
            0.0
        }
    }

    fn basic_cost(&self, v: usize, phase1: bool) -> f64 {
        if phase1 {
            self.infeasibility_cost(v)
        } else if v < self.n {
            self.p.cost[v]
        } else {
            0.0
        }
    }

    /// Phase marker plus the phase-one cost of every basic variable.
    fn cost_signature(&self, phase1: bool) -> Vec<i8> {
        let mut sig = vec![phase1 as i8];
        if phase1 {
            sig.extend(
                self.s_list
                    .iter()
                    .map(|&j| self.infeasibility_cost(j) as i8),
            );
            sig.extend(
                (0..self.m)
                    .filter(|&i| self.r_pos[i] == NONE)
                    .map(|i| self.infeasibility_cost(self.n + i) as i8),
            );
        }
        sig
    }

    fn is_infeasible(&self) -> bool {
        self.s_list
            .iter()
            .any(|&j| self.infeasibility_cost(j) != 0.0)
            || (0..self.m)
                .any(|i| self.r_pos[i] == NONE && self.infeasibility_cost(self.n + i) != 0.0)
    }

    fn recompute_logicals(&mut self) {
        for i in 0..self.m {
            if self.r_pos[i] == NONE {
                self.y[i] = self.p.rows[i]
                    .terms
                    .iter()
                    .map(|&(j, a)| a * self.x[j])
                    .sum();
            }
        }
    }

    /// Recomputes basic values from the nonbasic ones. Returns the kernel residual.
    fn solve_basics(&mut self) -> f64 {
        let k = self.r_list.len();
        let mut rhs = vec![0.0; k];
        for (pidx, &r) in self.r_list.iter().enumerate() {
            let mut v = self.y[r];
            for &(j, a) in &self.p.rows[r].terms {
                if self.s_pos[j] == NONE {
                    v -= a * self.x[j];
                }
            }
            rhs[pidx] = v;
        }
        for (i, &j) in self.s_list.iter().enumerate() {
            self.x[j] = self.kinv[i].iter().zip(&rhs).map(|(a, b)| a * b).sum();
        }
        let mut residual: f64 = 0.0;
        let scale = rhs.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        for (pidx, &r) in self.r_list.iter().enumerate() {
            let act: f64 = self.p.rows[r]
                .terms
                .iter()
                .filter(|&&(j, _)| self.s_pos[j] != NONE)
                .map(|&(j, a)| a * self.x[j])
                .sum();
            residual = residual.max((act - rhs[pidx]).abs() / scale);
        }
        residual
    }

    fn recompute(&mut self) {
        let residual = self.solve_basics();
        if residual > 1e-9 {
            if self.refactor() {
                self.solve_basics();
            } else {
                self.fall_back_to_slack_basis();
            }
        }
        self.recompute_logicals();
        self.since_recompute = 0;
    }

    /// Gauss-Jordan inversion of the kernel. False when it is singular.
    fn refactor(&mut self) -> bool {
        let k = self.s_list.len();
        // Augmented [K | I] with K rows indexed by R and columns by S.
        let mut a = vec![vec![0.0; 2 * k]; k];
        for (pidx, &r) in self.r_list.iter().enumerate() {
            for &(j, v) in &self.p.rows[r].terms {
                let i = self.s_pos[j];
                if i != NONE {
                    a[pidx][i] = v;
                }
            }
            a[pidx][k + pidx] = 1.0;
        }
        for col in 0..k {
            let piv = (col..k)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .expect("non-empty range");
            if a[piv][col].abs() < 1e-11 {
                return false;
            }
            a.swap(piv, col);
            let inv = 1.0 / a[col][col];
            for v in a[col].iter_mut() {
                *v *= inv;
            }
            let pivot_row = a[col].clone();
            for (r, row) in a.iter_mut().enumerate() {
                if r != col {
                    let f = row[col];
                    if f != 0.0 {
                        for (v, pv) in row.iter_mut().zip(&pivot_row) {
                            *v -= f * pv;
                        }
                    }
                }
            }
        }
        // Row i of the reduced block is K^-1 row for S position i.
        self.kinv = a.into_iter().map(|row| row[k..].to_vec()).collect();
        true
    }

    fn fall_back_to_slack_basis(&mut self) {
        for &j in &self.s_list {
            self.x[j] = self.x[j].clamp(self.p.lower[j], self.p.upper[j]);
            self.s_pos[j] = NONE;
        }
        for &r in &self.r_list {
            self.r_pos[r] = NONE;
        }
        self.s_list.clear();
        self.r_list.clear();
        self.kinv.clear();
    }

    /// Reduced costs: `(d_structural, d_logical_in_R)`, entries for basic
    /// variables are left at zero.
    fn price(&self, phase1: bool) -> (Vec<f64>, Vec<f64>) {
        let k = self.s_list.len();
        let mut h: Vec<f64> = self
            .s_list
            .iter()
            .map(|&j| self.basic_cost(j, phase1))
            .collect();
        let mut mu = vec![0.0; self.m];
        for l in 0..self.m {
            if self.r_pos[l] != NONE {
                continue;
            }
            let c = self.basic_cost(self.n + l, phase1);
            if c == 0.0 {
                continue;
            }
            mu[l] = c;
            for &(j, a) in &self.p.rows[l].terms {
                let i = self.s_pos[j];
                if i != NONE {
                    h[i] += c * a;
                }
            }
        }
        let mut pi = vec![0.0; k];
        for (i, row) in self.kinv.iter().enumerate() {
            if h[i] != 0.0 {
                for (pv, kv) in pi.iter_mut().zip(row) {
                    *pv += h[i] * kv;
                }
            }
        }
        for (pidx, &r) in self.r_list.iter().enumerate() {
            mu[r] = -pi[pidx];
        }
        let mut d = vec![0.0; self.n];
        for j in 0..self.n {
            if self.s_pos[j] != NONE {
                continue;
            }
            let base = if phase1 { 0.0 } else { self.p.cost[j] };
            d[j] = base + self.cols[j].iter().map(|&(r, a)| mu[r] * a).sum::<f64>();
        }
        (d, pi)
    }

    /// Picks the entering variable and its direction (+1 or -1).
    fn choose_entering(&self, d: &[f64], pi: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        let mut consider = |v: usize, dv: f64, lo: f64, hi: f64, val: f64, w: f64| {
            let dir = if dv < -self.opt_tol && val < hi {
                1.0
            } else if dv > self.opt_tol && val > lo {
                -1.0
            } else {
                return;
            };
            let score = dv.abs() * w;
            match best {
                Some(_) if bland => {}
                Some((_, _, s)) if s >= score => {}
                _ => best = Some((v, dir, score)),
            }
        };
        for j in 0..self.n {
            if self.s_pos[j] == NONE {
                consider(
                    j,
                    d[j],
                    self.p.lower[j],
                    self.p.upper[j],
                    self.x[j],
                    self.col_scale[j],
                );
            }
        }
        // Logicals are scanned in index order so that Bland's rule is well defined.
        let mut order: Vec<(usize, usize)> = self
            .r_list
            .iter()
            .enumerate()
            .map(|(p, &r)| (r, p))
            .collect();
        order.sort_unstable();
        for (r, pidx) in order {
            consider(
                self.n + r,
                pi[pidx],
                self.row_lo[r],
                self.row_hi[r],
                self.y[r],
                1.0,
            );
        }
        best.map(|(v, dir, _)| (v, dir))
    }

    /// Change of every basic structural (by S position) and of every row
    /// activity per unit increase of the entering variable.
    fn direction(&self, entering: usize) -> (Vec<f64>, Vec<f64>) {
        let k = self.s_list.len();
        let mut dx = vec![0.0; k];
        let mut dy = vec![0.0; self.m];
        if entering < self.n {
            for &(r, a) in &self.cols[entering] {
                let p = self.r_pos[r];
                if p != NONE {
                    for (i, row) in self.kinv.iter().enumerate() {
                        dx[i] -= row[p] * a;
                    }
                }
                dy[r] += a;
            }
        } else {
            let p = self.r_pos[entering - self.n];
            for (i, row) in self.kinv.iter().enumerate() {
                dx[i] = row[p];
            }
            dy[entering - self.n] = 1.0;
        }
        for (i, &j) in self.s_list.iter().enumerate() {
            if dx[i] != 0.0 {
                for &(r, a) in &self.cols[j] {
                    if self.r_pos[r] == NONE {
                        dy[r] += a * dx[i];
                    }
                }
            }
        }
        (dx, dy)
    }

    fn ratio_test(&self, entering: usize, dir: f64, dx: &[f64], dy: &[f64], bland: bool) -> Step {
        // (var, alpha, exact ratio, relaxed ratio, bound reached)
        let mut cands: Vec<(usize, f64, f64, f64, f64)> = Vec::new();
        let mut push = |v: usize, alpha: f64, val: f64, lo: f64, hi: f64| {
            if alpha.abs() < PIVOT_TOL {
                return;
            }
            let tol = self.tol;
            if val < lo - tol {
                if alpha > 0.0 {
                    let r = (lo - val) / alpha;
                    cands.push((v, alpha, r, r, lo));
                }
            } else if val > hi + tol {
                if alpha < 0.0 {
                    let r = (hi - val) / alpha;
                    cands.push((v, alpha, r, r, hi));
                }
            } else if alpha > 0.0 && hi.is_finite() {
                cands.push((v, alpha, (hi - val) / alpha, (hi + tol - val) / alpha, hi));
            } else if alpha < 0.0 && lo.is_finite() {
                cands.push((v, alpha, (lo - val) / alpha, (lo - tol - val) / alpha, lo));
            }
        };
        for (i, &j) in self.s_list.iter().enumerate() {
            push(j, dir * dx[i], self.x[j], self.p.lower[j], self.p.upper[j]);
        }
        for l in 0..self.m {
            if self.r_pos[l] == NONE {
                push(
                    self.n + l,
                    dir * dy[l],
                    self.y[l],
                    self.row_lo[l],
                    self.row_hi[l],
                );
            }
        }
        let (lo, hi) = self.bounds(entering);
        let own = hi - lo;

        if bland {
            let mut best: Option<(usize, f64, f64)> = None;
            for &(v, _, r, _, b) in &cands {
                let r = r.max(0.0);
                match best {
                    Some((bv, br, _)) if r > br || (r == br && v > bv) => {}
                    _ => best = Some((v, r, b)),
                }
            }
            return match best {
                Some((_, r, _)) if own <= r => Step::Flip(own),
                Some((var, theta, bound)) => Step::Leave { theta, var, bound },
                None if own.is_finite() => Step::Flip(own),
                None => Step::Unbounded,
            };
        }

        let theta_max = cands.iter().map(|c| c.3).fold(f64::INFINITY, f64::min);
        if own <= theta_max {
            return if own.is_finite() {
                Step::Flip(own)
            } else {
                Step::Unbounded
            };
        }
        let mut best: Option<(usize, f64, f64, f64)> = None;
        for &(v, alpha, r, _, b) in &cands {
            if r <= theta_max {
                match best {
                    Some((_, ba, _, _)) if ba >= alpha.abs() => {}
                    _ => best = Some((v, alpha.abs(), r, b)),
                }
            }
        }
        match best {
            Some((var, _, r, bound)) => Step::Leave {
                theta: r.max(0.0),
                var,
                bound,
            },
            None => Step::Unbounded,
        }
    }

    fn row_times_kinv(&self, row: usize) -> Vec<f64> {
        let mut z = vec![0.0; self.r_list.len()];
        for &(j, a) in &self.p.rows[row].terms {
            let i = self.s_pos[j];
            if i != NONE {
                for (zv, kv) in z.iter_mut().zip(&self.kinv[i]) {
                    *zv += a * kv;
                }
            }
        }
        z
    }

    fn update_basis(&mut self, entering: usize, leaving: usize, dx: &[f64], dy: &[f64]) {
        let n = self.n;
        match (entering < n, leaving < n) {
            (true, true) => {
                let i = self.s_pos[leaving];
                let wi = -dx[i];
                let pivot_row: Vec<f64> = self.kinv[i].iter().map(|v| v / wi).collect();
                for (k, row) in self.kinv.iter_mut().enumerate() {
                    if k == i {
                        row.copy_from_slice(&pivot_row);
                    } else {
                        let f = -dx[k];
                        if f != 0.0 {
                            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                                *v -= f * pv;
                            }
                        }
                    }
                }
                self.s_list[i] = entering;
                self.s_pos[leaving] = NONE;
                self.s_pos[entering] = i;
            }
            (true, false) => {
                let l = leaving - n;
                let alpha = dy[l];
                let z = self.row_times_kinv(l);
                for (i, row) in self.kinv.iter_mut().enumerate() {
                    let w = -dx[i];
                    if w != 0.0 {
                        for (v, zv) in row.iter_mut().zip(&z) {
                            *v += w * zv / alpha;
                        }
                    }
                    row.push(-w / alpha);
                }
                let mut new_row: Vec<f64> = z.iter().map(|v| -v / alpha).collect();
                new_row.push(1.0 / alpha);
                self.kinv.push(new_row);
                self.s_pos[entering] = self.s_list.len();
                self.s_list.push(entering);
                self.r_pos[l] = self.r_list.len();
                self.r_list.push(l);
            }
            (false, true) => {
                let r = entering - n;
                let p = self.r_pos[r];
                let i = self.s_pos[leaving];
                let sigma = self.kinv[i][p];
                let row_i = self.kinv[i].clone();
                for (k, row) in self.kinv.iter_mut().enumerate() {
                    if k != i {
                        let f = row[p] / sigma;
                        if f != 0.0 {
                            for (v, rv) in row.iter_mut().zip(&row_i) {
                                *v -= f * rv;
                            }
                        }
                    }
                }
                self.kinv.swap_remove(i);
                for row in self.kinv.iter_mut() {
                    row.swap_remove(p);
                }
                self.s_list.swap_remove(i);
                self.s_pos[leaving] = NONE;
                if i < self.s_list.len() {
                    self.s_pos[self.s_list[i]] = i;
                }
                self.r_list.swap_remove(p);
                self.r_pos[r] = NONE;
                if p < self.r_list.len() {
                    self.r_pos[self.r_list[p]] = p;
                }
            }
            (false, false) => {
                let r = entering - n;
                let l = leaving - n;
                let p = self.r_pos[r];
                let z = self.row_times_kinv(l);
                let zp = z[p];
                let v: Vec<f64> = self.kinv.iter().map(|row| row[p]).collect();
                for (row, &vi) in self.kinv.iter_mut().zip(&v) {
                    if vi != 0.0 {
                        for (q, val) in row.iter_mut().enumerate() {
                            let e = if q == p { 1.0 } else { 0.0 };
                            *val -= vi * (z[q] - e) / zp;
                        }
                    }
                }
                self.r_list[p] = l;
                self.r_pos[r] = NONE;
                self.r_pos[l] = p;
            }
        }
    }

    pub fn run(&mut self) -> SimplexStatus {
        let mut fresh = true;
        // Reduced costs survive a bound flip as long as the cost vector is
        // unchanged, which saves a full pricing pass per flip.
        let mut cached: Option<(Vec<f64>, Vec<f64>, Vec<i8>)> = None;
        loop {
            if self.since_recompute >= RECOMPUTE_EVERY {
                self.recompute();
                fresh = true;
                cached = None;
            }
            let phase1 = self.is_infeasible();
            let bland = self.degenerate > BLAND_AFTER;
            let sig = self.cost_signature(phase1);
            let (d, pi) = match cached.take() {
                Some((d, pi, s)) if s == sig => (d, pi),
                _ => self.price(phase1),
            };
            let Some((entering, dir)) = self.choose_entering(&d, &pi, bland) else {
                if !fresh {
                    self.recompute();
                    fresh = true;
                    continue;
                }
                return if phase1 {
                    SimplexStatus::Infeasible
                } else {
                    SimplexStatus::Optimal
                };
            };
            if self.iters >= self.max_iter {
                return SimplexStatus::IterationLimit;
            }
            self.iters += 1;
            let (dx, dy) = self.direction(entering);
            let step = self.ratio_test(entering, dir, &dx, &dy, bland);
            let theta = match step {
                Step::Unbounded => {
                    if phase1 || !fresh {
                        // Phase one cannot be unbounded; treat it as drift.
                        self.recompute();
                        fresh = true;
                        if phase1 {
                            self.degenerate = BLAND_AFTER + 1;
                        }
                        continue;
                    }
                    return SimplexStatus::Unbounded;
                }
                Step::Flip(t) | Step::Leave { theta: t, .. } => t,
            };
            if theta <= 1e-12 {
                self.degenerate += 1;
            } else {
                self.degenerate = 0;
            }
            let step_len = dir * theta;
            let cur = self.value(entering);
            self.set_value(entering, cur + step_len);
            if step_len != 0.0 {
                for (i, &j) in self.s_list.iter().enumerate() {
                    self.x[j] += step_len * dx[i];
                }
                for l in 0..self.m {
                    if self.r_pos[l] == NONE {
                        self.y[l] += step_len * dy[l];
                    }
                }
            }
            match step {
                Step::Flip(_) => {
                    let (lo, hi) = self.bounds(entering);
                    self.set_value(entering, if dir > 0.0 { hi } else { lo });
                    cached = Some((d, pi, sig));
                }
                Step::Leave { var, bound, .. } => {
                    self.update_basis(entering, var, &dx, &dy);
                    self.set_value(var, bound);
                    self.since_recompute += 1;
                }
                Step::Unbounded => unreachable!(),
            }
            fresh = false;
            debug_assert!(self.is_basic(entering) || matches!(step, Step::Flip(_)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::problem::Row;

    fn problem(lower: Vec<f64>, upper: Vec<f64>, cost: Vec<f64>, rows: Vec<Row>) -> ReducedProblem {
        let start = lower
            .iter()
            .zip(&upper)
            .map(|(&l, &u)| {
                if l.is_finite() {
                    l
                } else if u.is_finite() {
                    u
                } else {
                    0.0
                }
            })
            .collect();
        ReducedProblem {
            lower,
            upper,
            cost,
            start,
            rows,
        }
    }

    fn row(terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) -> Row {
        Row { terms, cmp, rhs }
    }

    #[test]
    fn free_variables_enter_the_kernel() {
        // min x + y s.t. x + y >= 2, x - y = 0, x, y free  ->  (1, 1)
        let p = problem(
            vec![f64::NEG_INFINITY; 2],
            vec![f64::INFINITY; 2],
            vec![1.0, 1.0],
            vec![
                row(vec![(0, 1.0), (1, 1.0)], Cmp::Ge, 2.0),
                row(vec![(0, 1.0), (1, -1.0)], Cmp::Eq, 0.0),
            ],
        );
        let mut s = Simplex::new(&p, 1e-9, 1e-9, 100);
        assert_eq!(s.run(), SimplexStatus::Optimal);
        assert!((s.values()[0] - 1.0).abs() < 1e-12 && (s.values()[1] - 1.0).abs() < 1e-12);
        assert_eq!(s.s_list.len(), 2);
    }

    #[test]
    fn kernel_inverse_matches_refactor() {
        // A few rows that force every kind of basis change.
        let p = problem(
            vec![-5.0, -5.0, -5.0],
            vec![5.0, 5.0, 5.0],
            vec![-1.0, -2.0, 1.0],
            vec![
                row(vec![(0, 1.0), (1, 1.0), (2, 1.0)], Cmp::Le, 4.0),
                row(vec![(0, 1.0), (1, -1.0)], Cmp::Ge, -1.0),
                row(vec![(1, 1.0), (2, -0.5)], Cmp::Le, 2.0),
                row(vec![(0, 0.3), (2, 1.0)], Cmp::Ge, -2.0),
            ],
        );
        let mut s = Simplex::new(&p, 1e-9, 1e-9, 100);
        assert_eq!(s.run(), SimplexStatus::Optimal);
        let kept = s.kinv.clone();
        assert!(s.refactor());
        for (a, b) in kept.iter().flatten().zip(s.kinv.iter().flatten()) {
            assert!((a - b).abs() < 1e-10);
        }
        let x = s.values().to_vec();
        for r in &p.rows {
            let act: f64 = r.terms.iter().map(|&(j, a)| a * x[j]).sum();
            match r.cmp {
                Cmp::Le => assert!(act <= r.rhs + 1e-9),
                Cmp::Ge => assert!(act >= r.rhs - 1e-9),
                Cmp::Eq => assert!((act - r.rhs).abs() < 1e-9),
            }
        }
    }

    #[test]
    fn infeasible_rows() {
        let p = problem(
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            vec![row(vec![(0, 1.0), (1, 1.0)], Cmp::Ge, 3.0)],
        );
        assert_eq!(
            Simplex::new(&p, 1e-9, 1e-9, 100).run(),
            SimplexStatus::Infeasible
        );
    }
}
