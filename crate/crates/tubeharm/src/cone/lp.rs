//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! The instances solved here are tiny (a handful of rows, a few dozen
//! columns), so a dense tableau is the simplest robust choice. Bland's rule
//! guarantees finite termination on the highly degenerate problems that
//! arise from zonotope membership (most right-hand sides are zero).

use crate::error::{Error, Result};

/// Outcome of [`minimize`].
#[derive(Debug, Clone)]
pub(crate) enum LpStatus {
    /// Optimal vertex.
    Optimal {
        x: Vec<f64>,
    },
    Infeasible {
        residual: f64,
    },
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.width
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs Bland-rule pivoting over `allowed` columns; returns pivots used.
    fn optimize(&mut self, allowed: usize, tol: f64, cap: usize) -> Result<usize> {
        let rhs = self.rhs();
        let mut pivots = 0;
        loop {
            let Some(enter) = (0..allowed).find(|&j| self.cost[j] < -tol) else {
                return Ok(pivots);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a > tol {
                    let ratio = row[rhs] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - tol
                                || ((ratio - br).abs() <= tol && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Format("linear program is unbounded".into()));
            };
            if pivots >= cap {
                return Err(Error::SolverStall { pivots });
            }
            self.pivot(r, enter);
            pivots += 1;
        }
    }
}

/// Minimizes `c·x` subject to `A x = b`, `x ≥ 0` (two-phase simplex).
///
/// `cap` bounds the pivots of each phase; `tol` is the pivoting and
/// feasibility tolerance.
pub(crate) fn minimize(
    a: &[Vec<f64>],
    b: &[f64],
    c: &[f64],
    tol: f64,
    cap: usize,
) -> Result<LpStatus> {
    let p = a.len();
    let q = c.len();
    let width = q + p;
    let mut rows = Vec::with_capacity(p);
    for (i, (ai, &bi)) in a.iter().zip(b).enumerate() {
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width + 1];
        for (j, v) in ai.iter().enumerate() {
            row[j] = sign * v;
        }
        row[q + i] = 1.0;
        row[width] = sign * bi;
        rows.push(row);
    }
    // Phase 1: minimize the sum of artificials.
    let mut cost = vec![0.0; width + 1];
    for row in &rows {
        for j in 0..q {
            cost[j] -= row[j];
        }
        cost[width] -= row[width];
    }
    let mut t = Tableau {
        rows,
        cost,
        basis: (q..q + p).collect(),
        width,
    };
    let mut pivots = t.optimize(q, tol, cap)?;
    let residual = -t.cost[width];
    if residual > tol {
        return Ok(LpStatus::Infeasible { residual });
    }
    // Drive zero-level artificials out of the basis where possible.
    for r in 0..p {
        if t.basis[r] >= q {
            if let Some(j) = (0..q).find(|&j| t.rows[r][j].abs() > tol) {
                t.pivot(r, j);
                pivots += 1;
            }
        }
    }
    // Phase 2: reduced costs of the true objective.
    let mut cost = vec![0.0; width + 1];
    cost[..q].copy_from_slice(c);
    for (r, row) in t.rows.iter().enumerate() {
        let cb = if t.basis[r] < q { c[t.basis[r]] } else { 0.0 };
        if cb != 0.0 {
            for (v, rv) in cost.iter_mut().zip(row) {
                *v -= cb * rv;
            }
        }
    }
    t.cost = cost;
    // Phase 2 gets whatever remains of the overall pivot budget.
    t.optimize(q, tol, cap.saturating_sub(pivots))?;
    let mut x = vec![0.0; q];
    for (r, &bv) in t.basis.iter().enumerate() {
        if bv < q {
            x[bv] = t.rows[r][width];
        }
    }
    Ok(LpStatus::Optimal { x })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp_optimum() {
        // min -x1 - x2  s.t. x1 + 2x2 + s1 = 4, 3x1 + x2 + s2 = 6
        let a = vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]];
        let b = vec![4.0, 6.0];
        let c = vec![-1.0, -1.0, 0.0, 0.0];
        match minimize(&a, &b, &c, 1e-12, 100).unwrap() {
            LpStatus::Optimal { x } => {
                let objective: f64 = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
                assert!((objective + 2.8).abs() < 1e-12);
                assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn infeasible_detected() {
        // x1 + x2 = -1 with x ≥ 0.
        let a = vec![vec![1.0, 1.0]];
        match minimize(&a, &[-1.0], &[0.0, 0.0], 1e-12, 100).unwrap() {
            LpStatus::Infeasible { residual } => assert!((residual - 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }
}
