//! Ruiz equilibration of the constraint matrix, keeping every second-order
//! cone block scaled by a single factor so cone membership is preserved.

use super::cones::{Cone, ConeSet};
use super::sparse::{norm_inf, CscMatrix};

const MIN_SCALE: f64 = 1e-4;
const MAX_SCALE: f64 = 1e4;

#[derive(Debug, Clone)]
pub struct Equilibration {
    /// Column scaling: `x = D x_scaled`.
    pub d: Vec<f64>,
    /// Row scaling: `s_scaled = E s`.
    pub e: Vec<f64>,
    /// Cost scaling: `c_scaled = c_scale * D c`.
    pub c_scale: f64,
}

impl Equilibration {
    pub fn identity(n: usize, m: usize) -> Self {
        Equilibration {
            d: vec![1.0; n],
            e: vec![1.0; m],
            c_scale: 1.0,
        }
    }

    /// Scale `a` in place and return the factors; `c` and `b` are scaled too.
    pub fn compute(
        a: &mut CscMatrix,
        b: &mut [f64],
        c: &mut [f64],
        cones: &ConeSet,
        iterations: usize,
    ) -> Self {
        let (n, m) = (a.ncols, a.nrows);
        let mut eq = Equilibration::identity(n, m);
        let mut col = vec![0.0; n];
        let mut row = vec![0.0; m];
        for _ in 0..iterations {
            col.iter_mut().for_each(|v| *v = 0.0);
            row.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..n {
                for p in a.colptr[j]..a.colptr[j + 1] {
                    let v = a.nzval[p].abs();
                    col[j] = f64::max(col[j], v);
                    row[a.rowval[p]] = f64::max(row[a.rowval[p]], v);
                }
            }
            let dstep: Vec<f64> = (0..n)
                .map(|j| bounded_step(col[j], eq.d[j]))
                .collect();
            let mut estep: Vec<f64> = vec![1.0; m];
            for (i, cone) in cones.cones().iter().enumerate() {
                let r = cones.range(i);
                match cone {
                    Cone::Soc(d) => {
                        let mean = row[r.clone()].iter().sum::<f64>() / *d as f64;
                        let s = bounded_step(mean, eq.e[r.start]);
                        estep[r].iter_mut().for_each(|v| *v = s);
                    }
                    _ => {
                        for k in r {
                            estep[k] = bounded_step(row[k], eq.e[k]);
                        }
                    }
                }
            }
            a.scale(&estep, &dstep);
            for j in 0..n {
                eq.d[j] *= dstep[j];
            }
            for i in 0..m {
                eq.e[i] *= estep[i];
            }
        }
        for i in 0..m {
            b[i] *= eq.e[i];
        }
        for j in 0..n {
            c[j] *= eq.d[j];
        }
        let cn = norm_inf(c);
        eq.c_scale = if cn > 0.0 && cn.is_finite() { 1.0 / cn } else { 1.0 };
        c.iter_mut().for_each(|v| *v *= eq.c_scale);
        eq
    }
}

/// `1/sqrt(norm)` limited so the accumulated factor stays within bounds.
fn bounded_step(norm: f64, current: f64) -> f64 {
    let raw = if norm > 0.0 && norm.is_finite() {
        1.0 / norm.sqrt()
    } else {
        1.0
    };
    (current * raw).clamp(MIN_SCALE, MAX_SCALE) / current
}
