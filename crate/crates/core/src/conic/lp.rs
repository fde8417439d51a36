//! Feasibility of `A x = b, x >= lower` by a dense phase-one simplex
//! (Bland's rule), for the small systems behind convex-hull membership.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Feasible(Vec<f64>),
    Infeasible,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Feasible(_))
    }
}

/// Decide whether `a_eq x = b_eq, x >= lower` has a solution; `a_eq` is
/// given row by row. A returned point satisfies the equalities to `1e-9`.
pub fn solve_lp_feasibility(a_eq: &[Vec<f64>], b_eq: &[f64], lower: &[f64]) -> Result<LpOutcome> {
    let m = a_eq.len();
    let n = lower.len();
    if b_eq.len() != m || a_eq.iter().any(|r| r.len() != n) {
        return Err(Error::dims("LP data has inconsistent dimensions"));
    }
    if a_eq.iter().flatten().chain(b_eq).chain(lower).any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("LP data contains non-finite values".into()));
    }
    // Shift to y = x - lower >= 0 and make the right-hand side nonnegative.
    let width = n + m + 1;
    let mut t = vec![0.0; m * width];
    for i in 0..m {
        let shift: f64 = (0..n).map(|j| a_eq[i][j] * lower[j]).sum();
        let rhs = b_eq[i] - shift;
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i * width + j] = sign * a_eq[i][j];
        }
        t[i * width + n + i] = 1.0;
        t[i * width + n + m] = sign * rhs;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut reduced = vec![0.0; n + m];
    for j in 0..n {
        reduced[j] = -(0..m).map(|i| t[i * width + j]).sum::<f64>();
    }

    let max_pivots = 50 * (n + m) + 100;
    let mut pivots = 0;
    loop {
        let Some(enter) = (0..n + m).find(|&j| reduced[j] < -PIVOT_TOL) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let aij = t[i * width + enter];
            if aij > PIVOT_TOL {
                let ratio = t[i * width + n + m] / aij;
                let better = ratio < best - 1e-15
                    || (ratio <= best + 1e-15 && leave.is_some_and(|l| basis[i] < basis[l]));
                if leave.is_none() || better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            // Unbounded direction in phase one cannot occur (objective >= 0).
            return Err(Error::NumericalFailure("phase-one simplex lost boundedness".into()));
        };
        let piv = t[r * width + enter];
        for v in &mut t[r * width..(r + 1) * width] {
            *v /= piv;
        }
        for i in 0..m {
            if i != r {
                let f = t[i * width + enter];
                if f != 0.0 {
                    for j in 0..width {
                        t[i * width + j] -= f * t[r * width + j];
                    }
                }
            }
        }
        let f = reduced[enter];
        for j in 0..n + m {
            reduced[j] -= f * t[r * width + j];
        }
        basis[r] = enter;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::NumericalFailure("phase-one simplex exceeded pivot limit".into()));
        }
    }

    let infeasibility: f64 = (0..m)
        .filter(|&i| basis[i] >= n)
        .map(|i| t[i * width + n + m].max(0.0))
        .sum();
    let scale = 1.0 + b_eq.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if infeasibility > FEAS_TOL * scale {
        return Ok(LpOutcome::Infeasible);
    }

    // Recover x from the structural basic columns and polish by least squares.
    let structural: Vec<(usize, usize)> = (0..m)
        .filter(|&i| basis[i] < n)
        .map(|i| (i, basis[i]))
        .collect();
    let mut x = lower.to_vec();
    for &(i, j) in &structural {
        x[j] += t[i * width + n + m].max(0.0);
    }
    if !structural.is_empty() {
        let cols: Vec<usize> = structural.iter().map(|&(_, j)| j).collect();
        let bmat = DMatrix::from_fn(m, cols.len(), |i, k| a_eq[i][cols[k]]);
        let rhs = DVector::from_fn(m, |i, _| {
            b_eq[i] - (0..n).filter(|j| !cols.contains(j)).map(|j| a_eq[i][j] * x[j]).sum::<f64>()
        });
        if let Ok(sol) = bmat.clone().svd(true, true).solve(&rhs, 1e-14) {
            let polished: Vec<f64> = cols.iter().enumerate().map(|(k, &j)| sol[k].max(lower[j])).collect();
            let mut trial = x.clone();
            for (k, &j) in cols.iter().enumerate() {
                trial[j] = polished[k];
            }
            if residual(a_eq, b_eq, &trial) <= residual(a_eq, b_eq, &x) {
                x = trial;
            }
        }
    }
    if residual(a_eq, b_eq, &x) <= FEAS_TOL * scale {
        Ok(LpOutcome::Feasible(x))
    } else {
        Ok(LpOutcome::Infeasible)
    }
}

fn residual(a: &[Vec<f64>], b: &[f64], x: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(row, bi)| (row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() - bi).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_examples() {
        let out = solve_lp_feasibility(&[vec![1.0, 1.0], vec![1.0, -1.0]], &[1.0, 0.0], &[0.0, 0.0]).unwrap();
        match out {
            LpOutcome::Feasible(x) => {
                assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12);
            }
            LpOutcome::Infeasible => panic!("should be feasible"),
        }
        let out = solve_lp_feasibility(&[vec![1.0, 1.0], vec![1.0, 1.0]], &[1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(out, LpOutcome::Infeasible);
        let out = solve_lp_feasibility(&[vec![], vec![]], &[1.0, 0.5], &[]).unwrap();
        assert_eq!(out, LpOutcome::Infeasible);
    }

    #[test]
    fn lower_bounds_and_negative_rhs() {
        // x1 - x2 = -3 with x >= (1, 1): e.g. (1, 4)
        let out = solve_lp_feasibility(&[vec![1.0, -1.0]], &[-3.0], &[1.0, 1.0]).unwrap();
        let LpOutcome::Feasible(x) = out else { panic!() };
        assert!((x[0] - x[1] + 3.0).abs() < 1e-12);
        assert!(x[0] >= 1.0 && x[1] >= 1.0);
    }

    #[test]
    fn degenerate_hull_membership() {
        // generators (0,0), (4,0), (0,4), (2,2) and target on an edge
        let a = vec![
            vec![1.0, 1.0, 1.0, 1.0],
            vec![0.0, 4.0, 0.0, 2.0],
            vec![0.0, 0.0, 4.0, 2.0],
        ];
        let out = solve_lp_feasibility(&a, &[1.0, 2.0, 2.0], &[0.0; 4]).unwrap();
        assert!(out.is_feasible());
        let out = solve_lp_feasibility(&a, &[1.0, 2.0, 2.0 + 1e-6], &[0.0; 4]).unwrap();
        assert_eq!(out, LpOutcome::Infeasible);
    }
}
