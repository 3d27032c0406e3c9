//! Minimum-cost perfect assignment (Hungarian algorithm with potentials).

use crate::error::{Result, SrError};

/// Optimal assignment for a square cost matrix given row-major.
/// Returns `p` with row `i` assigned to column `p[i]`.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Vec<usize>> {
    let n = cost.len();
    for row in cost {
        if row.len() != n {
            return Err(SrError::CardinalityMismatch {
                left: n,
                right: row.len(),
            });
        }
        if row.iter().any(|c| !c.is_finite()) {
            return Err(SrError::Domain("assignment costs must be finite".into()));
        }
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // 1-based arrays, index 0 is the virtual column
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    for i in 1..=n {
        col_owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[col_owner[j] - 1] = j - 1;
    }
    Ok(assignment)
}

/// Total cost of an assignment.
pub fn assignment_cost(cost: &[Vec<f64>], p: &[usize]) -> f64 {
    p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
}
