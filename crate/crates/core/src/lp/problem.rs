//! A general linear program and the `solve` entry point.

use serde::{Deserialize, Serialize};

use super::presolve::{presolve, Presolved, Reduced};
use super::simplex::{Simplex, SimplexStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Le => "<=",
            Cmp::Eq => "=",
            Cmp::Ge => ">=",
        }
    }
}

/// `sum(terms) cmp rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row, 0 when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.cmp {
            Cmp::Le => (act - self.rhs).max(0.0),
            Cmp::Ge => (self.rhs - act).max(0.0),
            Cmp::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Minimize `cost . x` subject to rows and variable bounds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cost: Vec<f64>,
    /// Optional starting values; the solver starts from them when they are
    /// inside the bounds.
    pub hint: Vec<Option<f64>>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.push(0.0);
        self.hint.push(None);
        self.lower.len() - 1
    }

    pub fn add_row(&mut self, terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) -> usize {
        self.rows.push(Row { terms, cmp, rhs });
        self.rows.len() - 1
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| (lo - v).max(v - hi).max(0.0))
            .fold(0.0, f64::max);
        self.rows
            .iter()
            .map(|r| r.violation(x))
            .fold(bounds, f64::max)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// The solver reached optimality but the answer failed the final
    /// feasibility check on the original rows.
    Numerical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    /// Values of every variable of the original program (empty unless optimal).
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Largest violation of a bound or row by `x`.
    pub max_violation: f64,
}

impl Solution {
    fn without_point(status: Status, iterations: usize) -> Self {
        Solution {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            iterations,
            max_violation: f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Simplex pivots (including bound flips) before giving up.
    pub max_iterations: usize,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    /// Accepted violation of the original rows after postsolve.
    pub verify_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 100_000,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            verify_tol: 1e-7,
        }
    }
}

pub fn solve_lp(lp: &LinearProgram, opts: &SolverOptions) -> Solution {
    Prepared::new(lp, &[]).solve_in_box(&[], opts)
}

/// A presolved program that can be re-solved under tighter bounds on a set
/// of protected variables.
pub(crate) struct Prepared<'a> {
    lp: &'a LinearProgram,
    reduced: Option<Reduced>,
}

impl<'a> Prepared<'a> {
    pub fn new(lp: &'a LinearProgram, protected: &[bool]) -> Self {
        let reduced = match presolve(lp, protected) {
            Presolved::Infeasible => None,
            Presolved::Reduced(r) => Some(r),
        };
        Prepared { lp, reduced }
    }

    /// Solves with extra bounds `(var, lo, hi)` on protected variables.
    pub fn solve_in_box(&self, boxes: &[(usize, f64, f64)], opts: &SolverOptions) -> Solution {
        let Some(reduced) = &self.reduced else {
            return Solution::without_point(Status::Infeasible, 0);
        };
        let mut problem = reduced.problem.clone();
        for &(j, lo, hi) in boxes {
            let c = reduced
                .compact_index(j)
                .expect("boxed variables must be protected");
            problem.lower[c] = problem.lower[c].max(lo);
            problem.upper[c] = problem.upper[c].min(hi);
            if problem.lower[c] > problem.upper[c] {
                return Solution::without_point(Status::Infeasible, 0);
            }
            problem.start[c] = problem.start[c].clamp(problem.lower[c], problem.upper[c]);
        }
        let violation = |x: &[f64]| {
            boxes
                .iter()
                .map(|&(j, lo, hi)| (lo - x[j]).max(x[j] - hi).max(0.0))
                .fold(self.lp.max_violation(x), f64::max)
        };
        let mut tol = opts.feasibility_tol;
        let mut total_iters = 0;
        // A failed final check is retried once with a tighter tolerance.
        for attempt in 0..2 {
            let budget = opts.max_iterations.saturating_sub(total_iters);
            let mut simplex = Simplex::new(&problem, tol, opts.optimality_tol, budget);
            let status = simplex.run();
            total_iters += simplex.iterations();
            let status = match status {
                SimplexStatus::Optimal => Status::Optimal,
                SimplexStatus::Infeasible => Status::Infeasible,
                SimplexStatus::Unbounded => Status::Unbounded,
                SimplexStatus::IterationLimit => Status::IterationLimit,
            };
            if status != Status::Optimal {
                return Solution::without_point(status, total_iters);
            }
            let x = reduced.postsolve(simplex.values());
            let v = violation(&x);
            if v <= opts.verify_tol || attempt == 1 {
                let objective = self.lp.objective_value(&x);
                let status = if v <= opts.verify_tol {
                    status
                } else {
                    Status::Numerical
                };
                return Solution {
                    status,
                    x,
                    objective,
                    iterations: total_iters,
                    max_violation: v,
                };
            }
            tol *= 1e-2;
        }
        unreachable!()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn single_bound() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(f64::NEG_INFINITY, f64::INFINITY);
        lp.cost[x] = 1.0;
        lp.add_row(vec![(x, 1.0)], Cmp::Ge, 1.0);
        let s = solve_lp(&lp, &opts());
        assert_eq!(s.status, Status::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_bounds() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(f64::NEG_INFINITY, f64::INFINITY);
        lp.add_row(vec![(x, 1.0)], Cmp::Le, -1.0);
        lp.add_row(vec![(x, 1.0)], Cmp::Ge, 1.0);
        assert_eq!(solve_lp(&lp, &opts()).status, Status::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, f64::INFINITY);
        let y = lp.add_var(0.0, f64::INFINITY);
        lp.cost[x] = -1.0;
        lp.add_row(vec![(x, 1.0), (y, -1.0)], Cmp::Le, 1.0);
        assert_eq!(solve_lp(&lp, &opts()).status, Status::Unbounded);
    }

    #[test]
    fn textbook_maximisation() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18, x,y >= 0  ->  (2, 6), 36
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, f64::INFINITY);
        let y = lp.add_var(0.0, f64::INFINITY);
        lp.cost = vec![-3.0, -5.0];
        lp.add_row(vec![(x, 1.0)], Cmp::Le, 4.0);
        lp.add_row(vec![(y, 2.0)], Cmp::Le, 12.0);
        lp.add_row(vec![(x, 3.0), (y, 2.0)], Cmp::Le, 18.0);
        let s = solve_lp(&lp, &opts());
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_chain_is_presolved() {
        // z = y, y = 2x + 1, z >= 3, min x  ->  x = 1
        let mut lp = LinearProgram::new();
        let x = lp.add_var(-10.0, 10.0);
        let y = lp.add_var(f64::NEG_INFINITY, f64::INFINITY);
        let z = lp.add_var(f64::NEG_INFINITY, f64::INFINITY);
        lp.cost[x] = 1.0;
        lp.add_row(vec![(z, 1.0), (y, -1.0)], Cmp::Eq, 0.0);
        lp.add_row(vec![(y, 1.0), (x, -2.0)], Cmp::Eq, 1.0);
        lp.add_row(vec![(z, 1.0)], Cmp::Ge, 3.0);
        let s = solve_lp(&lp, &opts());
        assert_eq!(s.status, Status::Optimal);
        assert!((s.x[x] - 1.0).abs() < 1e-12);
        assert!((s.x[z] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let mut lp = LinearProgram::new();
        let vars: Vec<usize> = (0..6).map(|_| lp.add_var(0.0, f64::INFINITY)).collect();
        for (i, &v) in vars.iter().enumerate() {
            lp.cost[v] = -((i + 1) as f64);
            lp.add_row(
                vec![(v, 1.0), (vars[(i + 1) % 6], 1.0)],
                Cmp::Le,
                1.0 + i as f64,
            );
        }
        let s = solve_lp(
            &lp,
            &SolverOptions {
                max_iterations: 1,
                ..opts()
            },
        );
        assert_eq!(s.status, Status::IterationLimit);
        assert_eq!(solve_lp(&lp, &opts()).status, Status::Optimal);
    }
}
