//! Cone arithmetic for the zero cone, the nonnegative orthant and
//! second-order cones: Jordan algebra, Nesterov-Todd scaling and step lengths.
//!
//! A second-order cone vector is stored head first: `(u0, u1)` with
//! `u0 >= ||u1||`.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Zero(usize),
    NonNeg(usize),
    Soc(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::NonNeg(d) | Cone::Soc(d) => d,
        }
    }
}

#[derive(Debug, Clone)]
enum Scaling {
    Zero,
    NonNeg { w: Vec<f64> },
    Soc { eta: f64, wbar: Vec<f64> },
}

/// Product cone with per-block Nesterov-Todd scaling state.
#[derive(Debug, Clone)]
pub struct ConeSet {
    cones: Vec<Cone>,
    offsets: Vec<usize>,
    dim: usize,
    scaling: Vec<Scaling>,
    /// Scaled point `lambda = W z = W^{-1} s`.
    pub lambda: Vec<f64>,
}

impl ConeSet {
    pub fn new(cones: Vec<Cone>) -> Self {
        let mut offsets = Vec::with_capacity(cones.len());
        let mut dim = 0;
        for c in &cones {
            offsets.push(dim);
            dim += c.dim();
        }
        let scaling = cones
            .iter()
            .map(|c| match *c {
                Cone::Zero(_) => Scaling::Zero,
                Cone::NonNeg(d) => Scaling::NonNeg { w: vec![1.0; d] },
                Cone::Soc(d) => {
                    let mut wbar = vec![0.0; d];
                    wbar[0] = 1.0;
                    Scaling::Soc { eta: 1.0, wbar }
                }
            })
            .collect();
        ConeSet {
            cones,
            offsets,
            dim,
            scaling,
            lambda: vec![0.0; dim],
        }
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    /// Range of rows covered by cone `i`.
    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i] + self.cones[i].dim()
    }

    /// Barrier degree: one per orthant coordinate and one per second-order cone.
    pub fn degree(&self) -> usize {
        self.cones
            .iter()
            .map(|c| match *c {
                Cone::Zero(_) => 0,
                Cone::NonNeg(d) => d,
                Cone::Soc(_) => 1,
            })
            .sum()
    }

    /// Whether row `r` belongs to the zero cone.
    pub fn zero_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.dim];
        for (i, c) in self.cones.iter().enumerate() {
            if let Cone::Zero(_) = c {
                for r in self.range(i) {
                    mask[r] = true;
                }
            }
        }
        mask
    }

    /// Smallest eigenvalue of `v` over all non-zero cones (`+inf` if none).
    #[cfg(test)]
    pub fn min_eigenvalue(&self, v: &[f64]) -> f64 {
        let mut out = f64::INFINITY;
        for (i, c) in self.cones.iter().enumerate() {
            let u = &v[self.range(i)];
            match c {
                Cone::Zero(_) => {}
                Cone::NonNeg(_) => out = u.iter().fold(out, |m, x| m.min(*x)),
                Cone::Soc(_) => out = out.min(u[0] - norm2(&u[1..])),
            }
        }
        out
    }

    /// Move `v` into the interior so that every cone's smallest eigenvalue is
    /// at least one; zero-cone entries are set to `zero_value`.
    pub fn shift_to_interior(&self, v: &mut [f64], zero_value: Option<f64>) {
        for (i, c) in self.cones.iter().enumerate() {
            let r = self.range(i);
            let u = &mut v[r];
            match c {
                Cone::Zero(_) => {
                    if let Some(z) = zero_value {
                        u.iter_mut().for_each(|x| *x = z);
                    }
                }
                Cone::NonNeg(_) => {
                    let m = u.iter().fold(f64::INFINITY, |m, x| m.min(*x));
                    if m < 1.0 {
                        u.iter_mut().for_each(|x| *x += 1.0 - m);
                    }
                }
                Cone::Soc(_) => {
                    let m = u[0] - norm2(&u[1..]);
                    if m < 1.0 {
                        u[0] += 1.0 - m;
                    }
                }
            }
        }
    }

    /// `v += alpha e` where `e` is the identity element of each non-zero cone.
    pub fn add_identity(&self, v: &mut [f64], alpha: f64) {
        for (i, c) in self.cones.iter().enumerate() {
            let r = self.range(i);
            match c {
                Cone::Zero(_) => {}
                Cone::NonNeg(_) => v[r].iter_mut().for_each(|x| *x += alpha),
                Cone::Soc(_) => v[r.start] += alpha,
            }
        }
    }

    /// Recompute the scaling for interior `s`, `z`. Returns `false` if either
    /// point has left the interior.
    pub fn update_scaling(&mut self, s: &[f64], z: &[f64]) -> bool {
        for i in 0..self.cones.len() {
            let r = self.range(i);
            let (si, zi) = (&s[r.clone()], &z[r.clone()]);
            match &mut self.scaling[i] {
                Scaling::Zero => self.lambda[r].iter_mut().for_each(|x| *x = 0.0),
                Scaling::NonNeg { w } => {
                    for k in 0..si.len() {
                        if !(si[k] > 0.0 && zi[k] > 0.0) {
                            return false;
                        }
                        w[k] = (si[k] / zi[k]).sqrt();
                        self.lambda[r.start + k] = (si[k] * zi[k]).sqrt();
                    }
                }
                Scaling::Soc { eta, wbar } => {
                    let s_res = soc_residual(si);
                    let z_res = soc_residual(zi);
                    if !(s_res > 0.0 && z_res > 0.0 && si[0] > 0.0 && zi[0] > 0.0) {
                        return false;
                    }
                    let (sn, zn) = (s_res.sqrt(), z_res.sqrt());
                    let mut sz = 0.0;
                    for k in 0..si.len() {
                        sz += si[k] / sn * zi[k] / zn;
                    }
                    let gamma = ((1.0 + sz) / 2.0).sqrt();
                    wbar[0] = (si[0] / sn + zi[0] / zn) / (2.0 * gamma);
                    for k in 1..si.len() {
                        wbar[k] = (si[k] / sn - zi[k] / zn) / (2.0 * gamma);
                    }
                    *eta = (s_res / z_res).sqrt().sqrt();
                    let lam = soc_w_mul(*eta, wbar, zi, false);
                    self.lambda[r].copy_from_slice(&lam);
                }
            }
        }
        true
    }

    /// `W v` (zero-cone rows map to zero).
    pub fn w_mul(&self, v: &[f64]) -> Vec<f64> {
        self.apply(v, false)
    }

    /// `W^{-1} v` (zero-cone rows map to zero).
    pub fn w_inv_mul(&self, v: &[f64]) -> Vec<f64> {
        self.apply(v, true)
    }

    fn apply(&self, v: &[f64], inverse: bool) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for i in 0..self.cones.len() {
            let r = self.range(i);
            match &self.scaling[i] {
                Scaling::Zero => {}
                Scaling::NonNeg { w } => {
                    for (k, idx) in r.enumerate() {
                        out[idx] = if inverse { v[idx] / w[k] } else { v[idx] * w[k] };
                    }
                }
                Scaling::Soc { eta, wbar } => {
                    let res = soc_w_mul(*eta, wbar, &v[r.clone()], inverse);
                    out[r].copy_from_slice(&res);
                }
            }
        }
        out
    }

    /// Visit the upper triangle of each cone's `W^2` block as
    /// `(row, col, value)` with `row <= col`, in a fixed order.
    pub fn for_each_w2_upper(&self, mut f: impl FnMut(usize, usize, f64)) {
        for i in 0..self.cones.len() {
            let r = self.range(i);
            match &self.scaling[i] {
                Scaling::Zero => {
                    for idx in r {
                        f(idx, idx, 0.0);
                    }
                }
                Scaling::NonNeg { w } => {
                    for (k, idx) in r.enumerate() {
                        f(idx, idx, w[k] * w[k]);
                    }
                }
                Scaling::Soc { eta, wbar } => {
                    let d = wbar.len();
                    let w = soc_w_matrix(*eta, wbar);
                    for col in 0..d {
                        for row in 0..=col {
                            let mut acc = 0.0;
                            for k in 0..d {
                                acc += w[row * d + k] * w[k * d + col];
                            }
                            f(r.start + row, r.start + col, acc);
                        }
                    }
                }
            }
        }
    }

    /// Sparsity pattern of [`ConeSet::for_each_w2_upper`].
    pub fn w2_pattern(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, c) in self.cones.iter().enumerate() {
            let r = self.range(i);
            match c {
                Cone::Zero(_) | Cone::NonNeg(_) => out.extend(r.map(|k| (k, k))),
                Cone::Soc(d) => {
                    for col in 0..*d {
                        for row in 0..=col {
                            out.push((r.start + row, r.start + col));
                        }
                    }
                }
            }
        }
        out
    }

    /// Jordan product `u o v` (zero on zero-cone rows).
    pub fn jordan_prod(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, c) in self.cones.iter().enumerate() {
            let r = self.range(i);
            match c {
                Cone::Zero(_) => {}
                Cone::NonNeg(_) => {
                    for k in r {
                        out[k] = u[k] * v[k];
                    }
                }
                Cone::Soc(_) => {
                    let (u, v) = (&u[r.clone()], &v[r.clone()]);
                    out[r.start] = u.iter().zip(v).map(|(a, b)| a * b).sum();
                    for k in 1..u.len() {
                        out[r.start + k] = u[0] * v[k] + v[0] * u[k];
                    }
                }
            }
        }
        out
    }

    /// `x` solving `lambda o x = d` (zero on zero-cone rows).
    pub fn lambda_div(&self, d: &[f64]) -> Vec<f64> {
        let lam = &self.lambda;
        let mut out = vec![0.0; self.dim];
        for (i, c) in self.cones.iter().enumerate() {
            let r = self.range(i);
            match c {
                Cone::Zero(_) => {}
                Cone::NonNeg(_) => {
                    for k in r {
                        out[k] = d[k] / lam[k];
                    }
                }
                Cone::Soc(_) => {
                    let (l, dd) = (&lam[r.clone()], &d[r.clone()]);
                    let l1d1: f64 = l[1..].iter().zip(&dd[1..]).map(|(a, b)| a * b).sum();
                    let x0 = (l[0] * dd[0] - l1d1) / soc_residual(l);
                    out[r.start] = x0;
                    for k in 1..l.len() {
                        out[r.start + k] = (dd[k] - x0 * l[k]) / l[0];
                    }
                }
            }
        }
        out
    }

    /// Largest `alpha` (capped at `cap`) with `u + alpha du` in the cone.
    pub fn step_length(&self, u: &[f64], du: &[f64], cap: f64) -> f64 {
        let mut alpha = cap;
        for (i, c) in self.cones.iter().enumerate() {
            let r = self.range(i);
            match c {
                Cone::Zero(_) => {}
                Cone::NonNeg(_) => {
                    for k in r {
                        if du[k] < 0.0 {
                            alpha = alpha.min(-u[k] / du[k]);
                        }
                    }
                }
                Cone::Soc(_) => {
                    alpha = alpha.min(soc_step(&u[r.clone()], &du[r]));
                }
            }
        }
        alpha.max(0.0)
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `u0^2 - ||u1||^2` computed as a product of sums to limit cancellation.
pub fn soc_residual(u: &[f64]) -> f64 {
    let n1 = norm2(&u[1..]);
    (u[0] - n1) * (u[0] + n1)
}

fn soc_w_mul(eta: f64, wbar: &[f64], v: &[f64], inverse: bool) -> Vec<f64> {
    let w0 = wbar[0];
    let w1v1: f64 = wbar[1..].iter().zip(&v[1..]).map(|(a, b)| a * b).sum();
    let mut out = vec![0.0; v.len()];
    if inverse {
        out[0] = (w0 * v[0] - w1v1) / eta;
        let coef = -v[0] + w1v1 / (1.0 + w0);
        for k in 1..v.len() {
            out[k] = (v[k] + coef * wbar[k]) / eta;
        }
    } else {
        out[0] = eta * (w0 * v[0] + w1v1);
        let coef = v[0] + w1v1 / (1.0 + w0);
        for k in 1..v.len() {
            out[k] = eta * (v[k] + coef * wbar[k]);
        }
    }
    out
}

/// Dense row-major `W` for one second-order cone.
fn soc_w_matrix(eta: f64, wbar: &[f64]) -> Vec<f64> {
    let d = wbar.len();
    let mut w = vec![0.0; d * d];
    w[0] = eta * wbar[0];
    for k in 1..d {
        w[k] = eta * wbar[k];
        w[k * d] = eta * wbar[k];
    }
    for i in 1..d {
        for j in 1..d {
            let id = if i == j { 1.0 } else { 0.0 };
            w[i * d + j] = eta * (id + wbar[i] * wbar[j] / (1.0 + wbar[0]));
        }
    }
    w
}

fn soc_step(u: &[f64], du: &[f64]) -> f64 {
    let a = du[0] * du[0] - du[1..].iter().map(|x| x * x).sum::<f64>();
    let b = u[0] * du[0] - u[1..].iter().zip(&du[1..]).map(|(x, y)| x * y).sum::<f64>();
    let c = soc_residual(u).max(0.0);
    let mut alpha = f64::INFINITY;
    if du[0] < 0.0 {
        alpha = -u[0] / du[0];
    }
    // smallest positive root of a t^2 + 2 b t + c
    let root = if a == 0.0 {
        if b < 0.0 {
            -c / (2.0 * b)
        } else {
            f64::INFINITY
        }
    } else {
        let disc = b * b - a * c;
        if disc < 0.0 {
            f64::INFINITY
        } else {
            let sq = disc.sqrt();
            let q = -(b + b.signum() * sq);
            let (r1, r2) = if q == 0.0 {
                (f64::INFINITY, f64::INFINITY)
            } else {
                (q / a, c / q)
            };
            [r1, r2]
                .into_iter()
                .filter(|r| *r > 0.0)
                .fold(f64::INFINITY, f64::min)
        }
    };
    alpha.min(root)
}
