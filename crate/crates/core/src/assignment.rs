//! Rectangular minimum-cost assignment.
//!
//! Shortest augmenting paths with row and column potentials (the Hungarian
//! method in its `O(m^2 n)` form). Each row is inserted in turn and the
//! potentials are kept feasible, so the final potentials certify optimality.

use crate::error::{ensure, Result};
use crate::types::MatchResult;

/// Slack used when comparing reduced costs during path scans.
const EPS: f64 = 1e-12;

/// Dense `rows x cols` cost matrix with `rows <= cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    costs: Vec<f64>,
}

impl CostMatrix {
    /// `costs` is row-major.
    pub fn new(rows: usize, cols: usize, costs: Vec<f64>) -> Result<Self> {
        ensure!(
            rows <= cols,
            InvalidInput,
            "cost matrix needs rows <= cols (got {rows} x {cols})"
        );
        ensure!(
            costs.len() == rows * cols,
            InvalidInput,
            "expected {} costs for a {rows} x {cols} matrix, got {}",
            rows * cols,
            costs.len()
        );
        ensure!(
            costs.iter().all(|c| c.is_finite() && *c >= 0.0),
            InvalidInput,
            "costs must be finite and nonnegative"
        );
        Ok(CostMatrix { rows, cols, costs })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut costs = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                costs.push(f(i, j));
            }
        }
        CostMatrix::new(rows, cols, costs)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.cols + j]
    }
}

/// Final potentials: `cost(i, j) - row[i] - col[j] >= 0` everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Duals {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

/// Minimum-cost assignment of every row to a distinct column.
pub fn solve_assignment(c: &CostMatrix) -> MatchResult {
    solve_assignment_with_duals(c).0
}

/// [`solve_assignment`] plus the dual potentials proving optimality.
pub fn solve_assignment_with_duals(c: &CostMatrix) -> (MatchResult, Duals) {
    let (m, n) = (c.rows, c.cols);
    // 1-based, with column 0 as the virtual source of each augmentation.
    let mut u = vec![0.0; m + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=m {
        owner[0] = i;
        let mut j0 = 0;
        min_slack.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = c.get(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = j0;
                }
                if min_slack[j] < delta - EPS {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[j0];
            owner[j0] = owner[prev];
            j0 = prev;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs = Vec::with_capacity(m);
    let mut total = 0.0;
    for j in 1..=n {
        if owner[j] != 0 {
            pairs.push((owner[j] - 1, j - 1));
            total += c.get(owner[j] - 1, j - 1);
        }
    }
    let duals = Duals {
        row: u[1..].to_vec(),
        col: v[1..].to_vec(),
    };
    (MatchResult::new(pairs, total), duals)
}

/// Complementary-slackness check: reduced costs nonnegative, zero on matched
/// pairs, column potentials nonpositive and zero on unmatched columns.
pub fn certificate_holds(c: &CostMatrix, result: &MatchResult, duals: &Duals, tol: f64) -> bool {
    if result.pairs.len() != c.rows || duals.row.len() != c.rows || duals.col.len() != c.cols {
        return false;
    }
    let mut col_used = vec![false; c.cols];
    for &(i, j) in &result.pairs {
        if col_used[j] {
            return false;
        }
        col_used[j] = true;
        if (c.get(i, j) - duals.row[i] - duals.col[j]).abs() > tol {
            return false;
        }
    }
    for i in 0..c.rows {
        for j in 0..c.cols {
            if c.get(i, j) - duals.row[i] - duals.col[j] < -tol {
                return false;
            }
        }
    }
    duals
        .col
        .iter()
        .zip(&col_used)
        .all(|(&v, &used)| v <= tol && (used || v.abs() <= tol))
}
