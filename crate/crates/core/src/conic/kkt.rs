//! The interior-point Newton system
//!
//! ```text
//! [ reg I    A^T      ] [dx]   [rx]
//! [ A       -(W^2+reg)] [dz] = [rz]
//! ```
//!
//! assembled once symbolically (AMD ordering, fixed pattern) and refactored
//! every iteration with fresh scaling blocks.

use super::cones::ConeSet;
use super::ldl::LdlFactor;
use super::sparse::{norm_inf, CscMatrix};

#[derive(Debug, Clone, Copy)]
pub struct KktSettings {
    pub static_reg: f64,
    pub dyn_eps: f64,
    pub dyn_delta: f64,
    pub refine_max_iter: usize,
    pub refine_reltol: f64,
    pub refine_abstol: f64,
}

impl Default for KktSettings {
    fn default() -> Self {
        KktSettings {
            static_reg: 1e-8,
            dyn_eps: 1e-13,
            dyn_delta: 2e-7,
            refine_max_iter: 10,
            refine_reltol: 1e-13,
            refine_abstol: 1e-12,
        }
    }
}

pub struct KktSystem {
    n: usize,
    m: usize,
    kp: Vec<usize>,
    ki: Vec<usize>,
    kx: Vec<f64>,
    perm: Vec<usize>,
    a_pos: Vec<usize>,
    xdiag_pos: Vec<usize>,
    h_pos: Vec<usize>,
    signs: Vec<f64>,
    factor: LdlFactor,
    settings: KktSettings,
    a: CscMatrix,
    work: Vec<f64>,
}

impl KktSystem {
    pub fn new(a: &CscMatrix, cones: &ConeSet, settings: KktSettings) -> Self {
        let (n, m) = (a.ncols, a.nrows);
        let dim = n + m;

        // Upper-triangle entries in original numbering, tagged by source.
        let mut entries: Vec<(usize, usize)> = Vec::with_capacity(n + a.nnz() + 4 * m);
        for i in 0..n {
            entries.push((i, i));
        }
        for j in 0..n {
            for p in a.colptr[j]..a.colptr[j + 1] {
                entries.push((j, n + a.rowval[p]));
            }
        }
        let pattern = cones.w2_pattern();
        for &(r, c) in &pattern {
            entries.push((n + r, n + c));
        }

        // Ordering on the full upper pattern.
        let (ap0, ai0) = upper_pattern(dim, &entries);
        let (perm, iperm) = match amd::order(dim, &ap0, &ai0, &amd::Control::default()) {
            Ok((p, pinv, _)) => (p, pinv),
            Err(_) => ((0..dim).collect::<Vec<_>>(), (0..dim).collect::<Vec<_>>()),
        };

        // Permuted upper CSC plus a map from each entry to its slot.
        let mut keyed: Vec<(usize, usize, usize)> = entries
            .iter()
            .enumerate()
            .map(|(id, &(r, c))| {
                let (pr, pc) = (iperm[r], iperm[c]);
                let (pr, pc) = if pr <= pc { (pr, pc) } else { (pc, pr) };
                (pc, pr, id)
            })
            .collect();
        keyed.sort_unstable();
        let mut kp = vec![0usize; dim + 1];
        let mut ki = Vec::with_capacity(keyed.len());
        let mut slot = vec![0usize; entries.len()];
        for (pos, &(pc, pr, id)) in keyed.iter().enumerate() {
            kp[pc + 1] += 1;
            ki.push(pr);
            slot[id] = pos;
        }
        for j in 0..dim {
            kp[j + 1] += kp[j];
        }
        let xdiag_pos = slot[..n].to_vec();
        let a_pos = slot[n..n + a.nnz()].to_vec();
        let h_pos = slot[n + a.nnz()..].to_vec();

        let mut signs = vec![0.0; dim];
        for (orig, &new) in iperm.iter().enumerate() {
            signs[new] = if orig < n { 1.0 } else { -1.0 };
        }
        let factor = LdlFactor::symbolic(dim, &kp, &ki);
        let mut kx = vec![0.0; ki.len()];
        for (p, &pos) in a_pos.iter().enumerate() {
            kx[pos] = a.nzval[p];
        }
        for &pos in &xdiag_pos {
            kx[pos] = settings.static_reg;
        }
        KktSystem {
            n,
            m,
            kp,
            ki,
            kx,
            perm,
            a_pos,
            xdiag_pos,
            h_pos,
            signs,
            factor,
            settings,
            a: a.clone(),
            work: vec![0.0; dim],
        }
    }

    /// Refill the scaling blocks from `cones` and refactor.
    pub fn update(&mut self, cones: &ConeSet) -> bool {
        let reg = self.settings.static_reg;
        let mut k = 0;
        let (kx, h_pos) = (&mut self.kx, &self.h_pos);
        cones.for_each_w2_upper(|r, c, v| {
            kx[h_pos[k]] = if r == c { -v - reg } else { -v };
            k += 1;
        });
        debug_assert_eq!(k, self.h_pos.len());
        debug_assert_eq!(self.a_pos.len(), self.a.nnz());
        debug_assert!(self.xdiag_pos.iter().all(|p| self.kx[*p] == reg));
        self.factor.numeric(
            &self.kp,
            &self.ki,
            &self.kx,
            &self.signs,
            self.settings.dyn_eps,
            self.settings.dyn_delta,
        )
    }

    fn solve_permuted(&mut self, rhs: &[f64], out: &mut [f64]) {
        for (k, &orig) in self.perm.iter().enumerate() {
            self.work[k] = rhs[orig];
        }
        self.factor.solve(&mut self.work);
        for (k, &orig) in self.perm.iter().enumerate() {
            out[orig] = self.work[k];
        }
    }

    /// `[0 A^T; A -W^2] u`, the unregularized operator.
    fn apply_true(&self, cones: &ConeSet, u: &[f64], y: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        y.iter_mut().for_each(|v| *v = 0.0);
        let (yx, yz) = y.split_at_mut(n);
        self.a.gemv_t(1.0, &u[n..], yx);
        self.a.gemv(1.0, &u[..n], yz);
        let h = cones.w_mul(&cones.w_mul(&u[n..]));
        for r in 0..m {
            yz[r] -= h[r];
        }
    }

    /// Solve with iterative refinement against the unregularized operator.
    pub fn solve(&mut self, cones: &ConeSet, rhs: &[f64], out: &mut [f64]) {
        let dim = self.n + self.m;
        self.solve_permuted(rhs, out);
        let normb = norm_inf(rhs);
        let mut res = vec![0.0; dim];
        let mut ku = vec![0.0; dim];
        let mut corr = vec![0.0; dim];
        self.apply_true(cones, out, &mut ku);
        for i in 0..dim {
            res[i] = rhs[i] - ku[i];
        }
        let mut norme = norm_inf(&res);
        for _ in 0..self.settings.refine_max_iter {
            if norme <= self.settings.refine_abstol + self.settings.refine_reltol * normb {
                break;
            }
            self.solve_permuted(&res, &mut corr);
            let trial: Vec<f64> = out.iter().zip(&corr).map(|(a, b)| a + b).collect();
            self.apply_true(cones, &trial, &mut ku);
            let new_res: Vec<f64> = rhs.iter().zip(&ku).map(|(a, b)| a - b).collect();
            let new_norm = norm_inf(&new_res);
            if !(new_norm < norme) {
                break;
            }
            let improved = norme / new_norm;
            out.copy_from_slice(&trial);
            res = new_res;
            norme = new_norm;
            if improved < 2.0 {
                break;
            }
        }
    }
}

fn upper_pattern(dim: usize, entries: &[(usize, usize)]) -> (Vec<usize>, Vec<usize>) {
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); dim];
    for &(r, c) in entries {
        cols[c].push(r);
    }
    let mut ap = Vec::with_capacity(dim + 1);
    let mut ai = Vec::with_capacity(entries.len());
    ap.push(0);
    for col in cols.iter_mut() {
        col.sort_unstable();
        col.dedup();
        ai.extend_from_slice(col);
        ap.push(ai.len());
    }
    (ap, ai)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::cones::Cone;

    #[test]
    fn solves_small_system_accurately() {
        let a = CscMatrix::from_triplets(
            4,
            3,
            &[(0, 0, 1.0), (0, 1, 1.0), (1, 1, 2.0), (2, 2, -1.0), (3, 0, 0.5), (3, 2, 1.0)],
        );
        let mut cones = ConeSet::new(vec![Cone::Zero(1), Cone::NonNeg(1), Cone::Soc(2)]);
        assert!(cones.update_scaling(&[0.0, 2.0, 3.0, 1.0], &[0.0, 0.5, 2.0, -0.5]));
        let mut kkt = KktSystem::new(&a, &cones, KktSettings::default());
        assert!(kkt.update(&cones));
        let rhs = [1.0, -2.0, 0.5, 0.3, 0.1, -0.7, 2.0];
        let mut u = vec![0.0; 7];
        kkt.solve(&cones, &rhs, &mut u);
        let mut ku = vec![0.0; 7];
        kkt.apply_true(&cones, &u, &mut ku);
        for i in 0..7 {
            assert!((ku[i] - rhs[i]).abs() < 1e-9, "row {i}: {} vs {}", ku[i], rhs[i]);
        }
    }
}
