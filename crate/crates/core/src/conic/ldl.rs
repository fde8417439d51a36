//! Sparse `L D L^T` factorization of a quasi-definite matrix given by its
//! upper triangle in CSC form (up-looking, elimination-tree based).
//!
//! Pivots carry an expected sign. A pivot that comes out with the wrong sign
//! or too close to zero is replaced by `sign * dyn_delta`, which keeps the
//! factorization defined on nearly singular systems; iterative refinement in
//! the caller recovers accuracy.

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    etree: Vec<usize>,
    lnz: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    // workspaces
    y_vals: Vec<f64>,
    y_marks: Vec<bool>,
    y_idx: Vec<usize>,
    elim: Vec<usize>,
    next_space: Vec<usize>,
    /// Count of pivots replaced by the dynamic regularization in the last factorization.
    pub bumped: usize,
}

impl LdlFactor {
    /// Symbolic analysis for the upper-triangular pattern `(ap, ai)`.
    pub fn symbolic(n: usize, ap: &[usize], ai: &[usize]) -> Self {
        let mut work = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut etree = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &row in &ai[ap[j]..ap[j + 1]] {
                let mut i = row;
                assert!(i <= j, "matrix must be upper triangular");
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let total = lp[n];
        LdlFactor {
            n,
            etree,
            lnz,
            lp,
            li: vec![0; total],
            lx: vec![0.0; total],
            d: vec![0.0; n],
            dinv: vec![0.0; n],
            y_vals: vec![0.0; n],
            y_marks: vec![false; n],
            y_idx: vec![0; n],
            elim: vec![0; n],
            next_space: vec![0; n],
            bumped: 0,
        }
    }

    #[cfg(test)]
    pub fn nnz_l(&self) -> usize {
        self.lp[self.n]
    }

    /// Numeric factorization. `signs[k]` is the expected sign of pivot `k`.
    pub fn numeric(
        &mut self,
        ap: &[usize],
        ai: &[usize],
        ax: &[f64],
        signs: &[f64],
        dyn_eps: f64,
        dyn_delta: f64,
    ) -> bool {
        let n = self.n;
        self.bumped = 0;
        self.next_space[..n].copy_from_slice(&self.lp[..n]);
        self.y_marks.iter_mut().for_each(|m| *m = false);
        self.y_vals.iter_mut().for_each(|v| *v = 0.0);
        debug_assert_eq!(self.lnz.len(), n);

        for k in 0..n {
            let mut nnz_y = 0;
            self.d[k] = 0.0;
            for p in ap[k]..ap[k + 1] {
                let bidx = ai[p];
                if bidx == k {
                    self.d[k] = ax[p];
                    continue;
                }
                self.y_vals[bidx] = ax[p];
                if !self.y_marks[bidx] {
                    self.y_marks[bidx] = true;
                    self.elim[0] = bidx;
                    let mut nnz_e = 1;
                    let mut next = self.etree[bidx];
                    while next != NONE && next < k {
                        if self.y_marks[next] {
                            break;
                        }
                        self.y_marks[next] = true;
                        self.elim[nnz_e] = next;
                        nnz_e += 1;
                        next = self.etree[next];
                    }
                    while nnz_e > 0 {
                        nnz_e -= 1;
                        self.y_idx[nnz_y] = self.elim[nnz_e];
                        nnz_y += 1;
                    }
                }
            }
            for i in (0..nnz_y).rev() {
                let c = self.y_idx[i];
                let tmp = self.next_space[c];
                let yc = self.y_vals[c];
                for j in self.lp[c]..tmp {
                    self.y_vals[self.li[j]] -= self.lx[j] * yc;
                }
                self.li[tmp] = k;
                self.lx[tmp] = yc * self.dinv[c];
                self.d[k] -= yc * self.lx[tmp];
                self.next_space[c] += 1;
                self.y_vals[c] = 0.0;
                self.y_marks[c] = false;
            }
            if signs[k] * self.d[k] <= dyn_eps {
                self.d[k] = signs[k] * dyn_delta;
                self.bumped += 1;
            }
            if !self.d[k].is_finite() {
                return false;
            }
            self.dinv[k] = 1.0 / self.d[k];
        }
        true
    }

    /// Solve `L D L^T x = b` in place.
    pub fn solve(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let xi = x[i];
            if xi != 0.0 {
                for j in self.lp[i]..self.lp[i + 1] {
                    x[self.li[j]] -= self.lx[j] * xi;
                }
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                acc -= self.lx[j] * x[self.li[j]];
            }
            x[i] = acc;
        }
    }
}
