//! Exact minimum-cost assignment (Hungarian method) on rectangular matrices,
//! with optional non-assignment.
//!
//! The solver runs the O(rows² · cols) potentials variant of the Hungarian
//! algorithm. Rectangular inputs and the `allow_skip` option are reduced to
//! the square case by padding with zero-cost dummy columns: with skipping
//! allowed, one dummy column per row means a row whose useful costs are all
//! nonnegative stays unassigned at cost 0.

use thiserror::Error;

/// A minimum-cost assignment instance. Rows are WDs, columns are APs in the
/// scheduler's use, but the solver is generic.
#[derive(Debug, Clone)]
pub struct AssignmentProblem {
    /// Finite cost entries, `costs[row][col]`.
    pub costs: Vec<Vec<f64>>,
    /// When true a row may stay unassigned at cost 0, so only
    /// negative-useful-cost rows are matched. Callers encode forbidden pairs
    /// as cost 0 (or any nonnegative value) under this mode.
    pub allow_skip: bool,
}

/// An optimal matching: at most one column per row, at most one row per
/// column, and the summed cost of the chosen real entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub assigned: Vec<Option<usize>>,
    pub total_cost: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssignmentError {
    #[error("cost matrix must have at least one row and one column")]
    Empty,
    #[error("cost matrix is ragged at row {0}")]
    Ragged(usize),
    #[error("cost entry ({0}, {1}) is not finite")]
    NonFinite(usize, usize),
}

/// Solves the instance exactly.
///
/// Without `allow_skip`, exactly `min(rows, cols)` rows are matched (all of
/// them when rows ≤ cols). Ties between optimal matchings are broken
/// deterministically, biased toward lower column indices by the scan order.
pub fn solve_assignment(problem: &AssignmentProblem) -> Result<Assignment, AssignmentError> {
    let rows = problem.costs.len();
    if rows == 0 || problem.costs[0].is_empty() {
        return Err(AssignmentError::Empty);
    }
    let cols = problem.costs[0].len();
    for (i, row) in problem.costs.iter().enumerate() {
        if row.len() != cols {
            return Err(AssignmentError::Ragged(i));
        }
        for (j, &c) in row.iter().enumerate() {
            if !c.is_finite() {
                return Err(AssignmentError::NonFinite(i, j));
            }
        }
    }

    // Pad to rows <= total columns with zero-cost dummies: one per row when
    // skipping is allowed, otherwise just enough for a perfect matching.
    let dummy = if problem.allow_skip {
        rows
    } else {
        rows.saturating_sub(cols)
    };
    let padded: Vec<Vec<f64>> = problem
        .costs
        .iter()
        .map(|row| {
            let mut r = row.clone();
            r.resize(cols + dummy, 0.0);
            r
        })
        .collect();

    let row_to_col = hungarian(&padded);
    let mut assigned = vec![None; rows];
    let mut total_cost = 0.0;
    for i in 0..rows {
        let j = row_to_col[i];
        if j < cols {
            assigned[i] = Some(j);
            total_cost += problem.costs[i][j];
        }
    }
    Ok(Assignment {
        assigned,
        total_cost,
    })
}

/// Potentials-based Hungarian algorithm for `rows <= cols`; returns the
/// matched column of each row. O(rows² · cols) time.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    debug_assert!(n <= m);
    // 1-based arrays with column 0 as the sentinel start of augmenting paths.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut matched_row = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if reduced < minv[j] {
                        minv[j] = reduced;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // Walk the alternating path backwards, flipping matches.
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=m {
        if matched_row[j] != 0 {
            row_to_col[matched_row[j] - 1] = j - 1;
        }
    }
    row_to_col
}
