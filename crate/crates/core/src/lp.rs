//! A dense primal simplex with row generation for the revenue LPs.
//!
//! Problems are maximizations over nonnegative variables subject to
//! `a . x <= b` rows with `b >= 0`, so the all-slack basis is feasible and
//! no phase-one is needed. Structural rows (bounds, feasibility) are always
//! in the tableau; the large incentive-constraint families are registered
//! as lazy rows and pulled in as cuts when violated, which keeps each
//! master small even though only a handful of incentive constraints bind
//! at an optimum. The tableau is kept in condensed (Tucker) form, with
//! Dantzig pricing and a Bland fallback after a stall to guard against
//! cycling.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SparseRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl SparseRow {
    fn violation(&self, x: &[f64]) -> f64 {
        let lhs: f64 = self.coeffs.iter().map(|(j, c)| c * x[*j]).sum();
        lhs - self.rhs
    }
}

#[derive(Debug, Clone)]
pub struct LpProblem {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<SparseRow>,
    pub lazy_rows: Vec<SparseRow>,
}

impl LpProblem {
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
            lazy_rows: Vec::new(),
        }
    }

    /// Adds `sum coeffs . x <= rhs` to the always-active set; `rhs` must be
    /// nonnegative.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        debug_assert!(rhs >= 0.0, "rows must have nonnegative rhs");
        self.rows.push(SparseRow { coeffs, rhs });
    }

    /// Adds a row that is enforced through cut generation.
    pub fn add_lazy_row(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        debug_assert!(rhs >= 0.0, "rows must have nonnegative rhs");
        self.lazy_rows.push(SparseRow { coeffs, rhs });
    }

    /// Largest violation of the full row system (eager and lazy) and the
    /// sign constraints at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for v in x {
            worst = worst.max(-v);
        }
        for row in self.rows.iter().chain(&self.lazy_rows) {
            worst = worst.max(row.violation(x));
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Residual of the returned point, re-checked against all rows.
    pub max_violation: f64,
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const CUT_TOL: f64 = 1e-9;
/// New cuts admitted per round.
const CUT_BATCH: usize = 300;
const MAX_ACTIVE_ROWS: usize = 60_000;

pub fn solve(problem: &LpProblem) -> Result<LpSolution> {
    let mut active: Vec<SparseRow> = problem.rows.clone();
    let mut admitted = vec![false; problem.lazy_rows.len()];
    let max_rounds = problem.lazy_rows.len() + 64;
    for _round in 0..max_rounds {
        if active.len() > MAX_ACTIVE_ROWS {
            return Err(Error::Lp(format!(
                "active row set grew past {MAX_ACTIVE_ROWS}"
            )));
        }
        let sol = solve_master(problem.n_vars, &problem.objective, &active)?;
        // violated lazy rows not yet admitted, worst first; an unbounded
        // master also admits rows that increase along the escaping ray,
        // since those are the ones that can close it
        let mut violated: Vec<(usize, f64)> = problem
            .lazy_rows
            .iter()
            .enumerate()
            .filter(|(i, _)| !admitted[*i])
            .map(|(i, row)| {
                let mut score = row.violation(&sol.x);
                if let Some(ray) = &sol.ray {
                    let along: f64 = row.coeffs.iter().map(|(j, c)| c * ray[*j]).sum();
                    if along > CUT_TOL {
                        score = score.max(along);
                    }
                }
                (i, score)
            })
            .filter(|(_, v)| *v > CUT_TOL)
            .collect();
        if violated.is_empty() {
            let max_violation = problem.max_violation(&sol.x);
            return Ok(LpSolution {
                status: sol.status,
                objective: sol.objective,
                x: sol.x,
                max_violation,
            });
        }
        violated.sort_by(|a, b| b.1.total_cmp(&a.1));
        for (i, _) in violated.into_iter().take(CUT_BATCH) {
            admitted[i] = true;
            active.push(problem.lazy_rows[i].clone());
        }
    }
    Err(Error::Lp("cut generation did not converge".into()))
}

struct RawSolution {
    status: LpStatus,
    objective: f64,
    x: Vec<f64>,
    /// Structural direction of the improving ray when unbounded.
    ray: Option<Vec<f64>>,
}

/// Solves one master. If the pivot sequence fails to terminate (heavily
/// degenerate systems can defeat the stall heuristics), retries once with
/// a tiny deterministic right-hand-side perturbation that breaks the
/// degeneracy; the perturbed vertex is feasible for the original rows to
/// within the perturbation size, far below the re-verification tolerance.
fn solve_master(n: usize, objective: &[f64], rows: &[SparseRow]) -> Result<RawSolution> {
    match simplex(n, objective, rows) {
        Ok(sol) => Ok(sol),
        Err(Error::Lp(_)) => {
            let perturbed: Vec<SparseRow> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| SparseRow {
                    coeffs: r.coeffs.clone(),
                    rhs: r.rhs
                        + 1e-11 * ((i as u64).wrapping_mul(2654435761) % 997 + 1) as f64,
                })
                .collect();
            let mut sol = simplex(n, objective, &perturbed)?;
            sol.objective = objective
                .iter()
                .zip(&sol.x)
                .map(|(c, x)| c * x)
                .sum();
            Ok(sol)
        }
        Err(e) => Err(e),
    }
}

fn simplex(n: usize, objective: &[f64], rows: &[SparseRow]) -> Result<RawSolution> {
    let m = rows.len();
    if rows.iter().any(|r| r.rhs < 0.0) {
        return Err(Error::Lp("negative rhs; infeasible start".into()));
    }

    // condensed tableau: m x (n+1), last column is the basic value
    let width = n + 1;
    let mut tab = vec![0.0f64; m * width];
    for (i, row) in rows.iter().enumerate() {
        for &(j, c) in &row.coeffs {
            tab[i * width + j] += c;
        }
        tab[i * width + n] = row.rhs;
    }
    let mut cost: Vec<f64> = objective.to_vec();
    let mut obj_value = 0.0f64;

    // labels: 0..n structural, n..n+m slacks
    let mut nonbasic: Vec<usize> = (0..n).collect();
    let mut basic: Vec<usize> = (n..n + m).collect();

    let max_iters = 20_000 + 30 * (m + n);
    let stall_limit = 200 + (m + n) / 4;
    let mut stall = 0usize;
    let mut bland = false;

    for _iter in 0..max_iters {
        // entering column
        let mut enter: Option<usize> = None;
        if bland {
            let mut best_label = usize::MAX;
            for (j, &c) in cost.iter().enumerate() {
                if c > COST_TOL && nonbasic[j] < best_label {
                    best_label = nonbasic[j];
                    enter = Some(j);
                }
            }
        } else {
            let mut best = COST_TOL;
            for (j, &c) in cost.iter().enumerate() {
                if c > best {
                    best = c;
                    enter = Some(j);
                }
            }
        }
        let e = match enter {
            Some(e) => e,
            None => {
                return Ok(RawSolution {
                    status: LpStatus::Optimal,
                    objective: obj_value,
                    x: extract(&tab, width, n, &basic),
                    ray: None,
                });
            }
        };

        // ratio test; Bland breaks exact ties by the lowest basic label,
        // otherwise ties go to the largest pivot element for stability
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let a = tab[i * width + e];
            if a > PIVOT_TOL {
                let ratio = (tab[i * width + n] / a).max(0.0);
                let better = if bland {
                    ratio < best_ratio
                        || (ratio == best_ratio
                            && leave.map_or(true, |r| basic[i] < basic[r]))
                } else {
                    ratio < best_ratio - 1e-12
                        || (ratio < best_ratio + 1e-12
                            && leave.map_or(true, |r| a > tab[r * width + e]))
                };
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let r = match leave {
            Some(r) => r,
            None => {
                // improving ray: the entering variable grows, basic
                // variables move by the negated tableau column
                let mut ray = vec![0.0f64; n];
                if nonbasic[e] < n {
                    ray[nonbasic[e]] = 1.0;
                }
                for (i, &label) in basic.iter().enumerate() {
                    if label < n {
                        ray[label] = -tab[i * width + e];
                    }
                }
                return Ok(RawSolution {
                    status: LpStatus::Unbounded,
                    objective: f64::INFINITY,
                    x: extract(&tab, width, n, &basic),
                    ray: Some(ray),
                });
            }
        };

        // Jordan exchange at (r, e)
        let piv = tab[r * width + e];
        let inv = 1.0 / piv;
        let (row_r, rest) = split_row_mut(&mut tab, width, r);
        for v in row_r.iter_mut() {
            *v *= inv;
        }
        row_r[e] = inv;
        for row in rest {
            let factor = row[e];
            if factor != 0.0 {
                for (j, v) in row.iter_mut().enumerate() {
                    *v -= factor * row_r[j];
                }
                row[e] = -factor * inv;
            }
        }
        let cfac = cost[e];
        if cfac != 0.0 {
            for j in 0..n {
                cost[j] -= cfac * row_r[j];
            }
            cost[e] = -cfac * inv;
            let delta = cfac * row_r[n];
            obj_value += delta;
            if delta.abs() <= 1e-13 * (1.0 + obj_value.abs()) {
                stall += 1;
                if stall > stall_limit {
                    bland = true;
                }
            } else {
                stall = 0;
            }
        }
        std::mem::swap(&mut basic[r], &mut nonbasic[e]);
    }
    Err(Error::Lp(format!("iteration limit ({max_iters}) reached")))
}

fn extract(tab: &[f64], width: usize, n: usize, basic: &[usize]) -> Vec<f64> {
    let mut x = vec![0.0f64; n];
    for (i, &label) in basic.iter().enumerate() {
        if label < n {
            x[label] = tab[i * width + n].max(0.0);
        }
    }
    x
}

/// Splits the tableau into row `r` and the other rows.
fn split_row_mut(
    tab: &mut [f64],
    width: usize,
    r: usize,
) -> (&mut [f64], Vec<&mut [f64]>) {
    let m = tab.len() / width;
    let ptr = tab.as_mut_ptr();
    // rows are disjoint slices of the backing buffer
    unsafe {
        let row_r = std::slice::from_raw_parts_mut(ptr.add(r * width), width);
        let mut rest = Vec::with_capacity(m - 1);
        for i in 0..m {
            if i != r {
                rest.push(std::slice::from_raw_parts_mut(ptr.add(i * width), width));
            }
        }
        (row_r, rest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_lp() {
        // max x + 2y subject to x + y <= 4, y <= 3
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, 2.0];
        p.add_row(vec![(0, 1.0), (1, 1.0)], 4.0);
        p.add_row(vec![(1, 1.0)], 3.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_abs_diff_eq!(s.objective, 7.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.x[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.x[1], 3.0, epsilon = 1e-9);
        assert!(s.max_violation <= 1e-9);
    }

    #[test]
    fn unbounded_detected() {
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, 0.0];
        p.add_row(vec![(1, 1.0)], 1.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn degenerate_lp_terminates() {
        // many zero-rhs rows force degenerate pivots
        let mut p = LpProblem::new(3);
        p.objective = vec![1.0, 1.0, 1.0];
        for a in 0..3usize {
            for b in 0..3usize {
                if a != b {
                    p.add_row(vec![(a, 1.0), (b, -1.0)], 0.0);
                }
            }
        }
        p.add_row(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 3.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_abs_diff_eq!(s.objective, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn lazy_rows_are_enforced() {
        // max x + y with x, y <= 2 eager and the binding x + y <= 3 lazy
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, 1.0];
        p.add_row(vec![(0, 1.0)], 2.0);
        p.add_row(vec![(1, 1.0)], 2.0);
        p.add_lazy_row(vec![(0, 1.0), (1, 1.0)], 3.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_abs_diff_eq!(s.objective, 3.0, epsilon = 1e-9);
        assert!(s.max_violation <= 1e-9);
    }

    #[test]
    fn unbounded_master_recovers_through_cuts() {
        // the eager set leaves x unbounded; a lazy cap closes it
        let mut p = LpProblem::new(1);
        p.objective = vec![1.0];
        p.add_lazy_row(vec![(0, 1.0)], 5.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_abs_diff_eq!(s.objective, 5.0, epsilon = 1e-9);
    }
}
