//! Primal-dual interior-point method on the homogeneous self-dual embedding
//!
//! ```text
//! A^T z + c tau = 0,   A x + s - b tau = 0,   c^T x + b^T z + kappa = 0,
//! s in K, z in K*, tau, kappa >= 0,
//! ```
//!
//! with Nesterov-Todd scaling and a Mehrotra predictor-corrector. When `tau`
//! vanishes the iterates approach a ray: `z` with `A^T z = 0, b^T z < 0`
//! (primal infeasible) or `x` with `A x + s = 0, c^T x < 0` (dual infeasible).

use super::cones::ConeSet;
use super::equilibrate::Equilibration;
use super::kkt::{KktSettings, KktSystem};
use super::sparse::{dot, norm_inf, CscMatrix};
use super::{Cone, SolverOptions};

/// `minimize c^T x  s.t.  A x + s = b, s in K`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardForm {
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub cones: Vec<Cone>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpmStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    NumericalError,
    Stalled,
}

#[derive(Debug, Clone)]
pub struct IpmResult {
    pub status: IpmStatus,
    /// Solution (Optimal) or ray (DualInfeasible), original scaling.
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    /// Dual solution (Optimal) or normalized ray (PrimalInfeasible).
    pub z: Vec<f64>,
    pub iterations: usize,
    pub pres: f64,
    pub dres: f64,
    pub gap: f64,
    pub message: String,
}

const STEP_FRACTION: f64 = 0.99;
const MIN_STEP: f64 = 1e-10;
const STALL_LIMIT: usize = 8;

struct Unscaler<'a> {
    sf: &'a StandardForm,
    eq: &'a Equilibration,
}

impl Unscaler<'_> {
    fn x(&self, x: &[f64], k: f64) -> Vec<f64> {
        x.iter().zip(&self.eq.d).map(|(v, d)| v * d / k).collect()
    }
    fn s(&self, s: &[f64], k: f64) -> Vec<f64> {
        s.iter().zip(&self.eq.e).map(|(v, e)| v / e / k).collect()
    }
    fn z(&self, z: &[f64], k: f64) -> Vec<f64> {
        z.iter()
            .zip(&self.eq.e)
            .map(|(v, e)| v * e / (self.eq.c_scale * k))
            .collect()
    }

    /// Relative primal/dual residuals and gap of the candidate `x/tau, s/tau, z/tau`.
    fn optimality(&self, x: &[f64], s: &[f64], z: &[f64], tau: f64) -> (f64, f64, f64, f64, f64) {
        let sf = self.sf;
        let (xu, su, zu) = (self.x(x, tau), self.s(s, tau), self.z(z, tau));
        let ax = sf.a.mul(&xu);
        let pr: Vec<f64> = (0..sf.b.len()).map(|i| ax[i] + su[i] - sf.b[i]).collect();
        let pres = norm_inf(&pr) / (1.0 + norm_inf(&sf.b).max(norm_inf(&ax)).max(norm_inf(&su)));
        let atz = sf.a.mul_t(&zu);
        let dr: Vec<f64> = (0..sf.c.len()).map(|j| atz[j] + sf.c[j]).collect();
        let dres = norm_inf(&dr) / (1.0 + norm_inf(&sf.c).max(norm_inf(&atz)));
        let pobj = dot(&sf.c, &xu);
        let dobj = -dot(&sf.b, &zu);
        (pres, dres, pobj, dobj, (pobj - dobj).abs())
    }
}

pub fn solve_standard(sf: &StandardForm, opts: &SolverOptions) -> IpmResult {
    let (n, m) = (sf.a.ncols, sf.a.nrows);
    let mut a = sf.a.clone();
    let mut b = sf.b.clone();
    let mut c = sf.c.clone();
    let mut cones = ConeSet::new(sf.cones.clone());
    let eq = if opts.equilibrate_iters > 0 {
        Equilibration::compute(&mut a, &mut b, &mut c, &cones, opts.equilibrate_iters)
    } else {
        let mut eq = Equilibration::identity(n, m);
        let cn = norm_inf(&c);
        if cn > 0.0 {
            eq.c_scale = 1.0 / cn;
            c.iter_mut().for_each(|v| *v /= cn);
        }
        eq
    };
    let un = Unscaler { sf, eq: &eq };
    let zero_rows = cones.zero_mask();
    let nu = cones.degree() as f64;
    let mut result = IpmResult {
        status: IpmStatus::NumericalError,
        x: vec![0.0; n],
        s: vec![0.0; m],
        z: vec![0.0; m],
        iterations: 0,
        pres: f64::INFINITY,
        dres: f64::INFINITY,
        gap: f64::INFINITY,
        message: String::new(),
    };

    // Initial point from two least-squares systems with identity scaling.
    let mut ident = vec![0.0; m];
    cones.add_identity(&mut ident, 1.0);
    cones.update_scaling(&ident, &ident);
    let mut kkt = KktSystem::new(&a, &cones, KktSettings::default());
    if !kkt.update(&cones) {
        result.message = "initial factorization failed".into();
        return result;
    }
    let mut u = vec![0.0; n + m];
    let mut rhs = vec![0.0; n + m];
    rhs[n..].copy_from_slice(&b);
    kkt.solve(&cones, &rhs, &mut u);
    let mut x = u[..n].to_vec();
    let ax = a.mul(&x);
    let mut s: Vec<f64> = (0..m).map(|i| b[i] - ax[i]).collect();
    cones.shift_to_interior(&mut s, Some(0.0));
    rhs[..n].iter_mut().zip(&c).for_each(|(r, cj)| *r = -cj);
    rhs[n..].iter_mut().for_each(|r| *r = 0.0);
    kkt.solve(&cones, &rhs, &mut u);
    let mut z = u[n..].to_vec();
    cones.shift_to_interior(&mut z, None);
    let (mut tau, mut kappa) = (1.0_f64, 1.0_f64);

    let mut stall = 0usize;
    let mut u1 = vec![0.0; n + m];
    let mut u2 = vec![0.0; n + m];
    for iter in 0..=opts.max_iter {
        result.iterations = iter;
        // Residuals in the scaled space.
        let mut rx = a.mul_t(&z);
        rx.iter_mut().zip(&c).for_each(|(r, cj)| *r += cj * tau);
        let ax = a.mul(&x);
        let rz: Vec<f64> = (0..m).map(|i| ax[i] + s[i] - b[i] * tau).collect();
        let rtau = dot(&c, &x) + dot(&b, &z) + kappa;

        let (pres, dres, pobj, dobj, gap) = un.optimality(&x, &s, &z, tau);
        result.pres = pres;
        result.dres = dres;
        result.gap = gap;
        if !(pres.is_finite() && dres.is_finite() && tau.is_finite() && kappa.is_finite()) {
            result.status = IpmStatus::NumericalError;
            result.message = format!("non-finite iterate at iteration {iter}");
            return result;
        }
        let gap_rel = gap / pobj.abs().min(dobj.abs()).max(1.0);
        if opts.verbose {
            log::debug!(
                "ipm {iter:3} pobj {pobj:+.8e} dobj {dobj:+.8e} pres {pres:.2e} dres {dres:.2e} gap {gap:.2e} tau {tau:.2e} kappa {kappa:.2e}"
            );
        }
        if pres <= opts.feas_tol && dres <= opts.feas_tol && (gap <= opts.gap_tol || gap_rel <= opts.gap_tol) {
            result.status = IpmStatus::Optimal;
            result.x = un.x(&x, tau);
            result.s = un.s(&s, tau);
            result.z = un.z(&z, tau);
            for (i, zr) in zero_rows.iter().enumerate() {
                if *zr {
                    result.s[i] = 0.0;
                }
            }
            return result;
        }
        if let Some(ray) = primal_ray(&un, &z, opts.infeas_tol) {
            result.status = IpmStatus::PrimalInfeasible;
            result.z = ray;
            result.message = format!("primal infeasible at iteration {iter}");
            return result;
        }
        if let Some((rx_ray, rs_ray)) = dual_ray(&un, &x, &s, opts.infeas_tol) {
            result.status = IpmStatus::DualInfeasible;
            result.x = rx_ray;
            result.s = rs_ray;
            result.message = format!("dual infeasible at iteration {iter}");
            return result;
        }
        if iter == opts.max_iter {
            break;
        }

        // Newton systems.
        if !cones.update_scaling(&s, &z) {
            result.status = IpmStatus::NumericalError;
            result.message = format!("iterate left the cone at iteration {iter}");
            return result;
        }
        if !kkt.update(&cones) {
            result.status = IpmStatus::NumericalError;
            result.message = format!("factorization failed at iteration {iter}");
            return result;
        }
        let mu = (dot(&s, &z) + tau * kappa) / (nu + 1.0);
        rhs[..n].iter_mut().zip(&c).for_each(|(r, cj)| *r = -cj);
        rhs[n..].copy_from_slice(&b);
        kkt.solve(&cones, &rhs, &mut u2);
        let denom_base = dot(&c, &u2[..n]) + dot(&b, &u2[n..]);

        let lam = cones.lambda.clone();
        let lam_sq = cones.jordan_prod(&lam, &lam);
        let mut solve_dir = |ds: &[f64], dkappa: f64, scale: f64, u1: &mut Vec<f64>| {
            let w_ld = cones.w_mul(&cones.lambda_div(ds));
            for j in 0..n {
                rhs[j] = -scale * rx[j];
            }
            for i in 0..m {
                rhs[n + i] = -scale * rz[i] + w_ld[i];
            }
            kkt.solve(&cones, &rhs, u1);
            let dtau = (-scale * rtau + dkappa / tau - dot(&c, &u1[..n]) - dot(&b, &u1[n..]))
                / (denom_base - kappa / tau);
            let dx: Vec<f64> = (0..n).map(|j| u1[j] + dtau * u2[j]).collect();
            let dz: Vec<f64> = (0..m).map(|i| u1[n + i] + dtau * u2[n + i]).collect();
            let wdz = cones.w_mul(&dz);
            let w2dz = cones.w_mul(&wdz);
            let dsv: Vec<f64> = (0..m)
                .map(|i| if zero_rows[i] { 0.0 } else { -w_ld[i] - w2dz[i] })
                .collect();
            let dk = (-dkappa - kappa * dtau) / tau;
            (dx, dz, dsv, dtau, dk)
        };

        // Predictor.
        let (_, dz_a, ds_a, dtau_a, dk_a) = solve_dir(&lam_sq, tau * kappa, 1.0, &mut u1);
        let alpha_a = step(&cones, &s, &ds_a, &z, &dz_a, tau, dtau_a, kappa, dk_a);
        let sigma = (1.0 - alpha_a).powi(3);

        // Corrector.
        let cross = cones.jordan_prod(&cones.w_inv_mul(&ds_a), &cones.w_mul(&dz_a));
        let mut ds_c: Vec<f64> = (0..m).map(|i| lam_sq[i] + cross[i]).collect();
        cones.add_identity(&mut ds_c, -sigma * mu);
        let dk_c = tau * kappa + dtau_a * dk_a - sigma * mu;
        let (dx, dz, dsv, dtau, dk) = solve_dir(&ds_c, dk_c, 1.0 - sigma, &mut u1);
        let alpha = (STEP_FRACTION * step(&cones, &s, &dsv, &z, &dz, tau, dtau, kappa, dk)).min(1.0);
        if !alpha.is_finite() {
            result.status = IpmStatus::NumericalError;
            result.message = format!("invalid step at iteration {iter}");
            return result;
        }
        if alpha < MIN_STEP {
            stall += 1;
            if stall >= STALL_LIMIT {
                result.status = IpmStatus::Stalled;
                result.message = format!("step length below {MIN_STEP:e} at iteration {iter}");
                break;
            }
        } else {
            stall = 0;
        }
        for j in 0..n {
            x[j] += alpha * dx[j];
        }
        for i in 0..m {
            s[i] += alpha * dsv[i];
            z[i] += alpha * dz[i];
        }
        tau += alpha * dtau;
        kappa += alpha * dk;
    }
    if result.status != IpmStatus::Stalled {
        result.status = IpmStatus::MaxIterations;
        result.message = format!("iteration limit {} reached", opts.max_iter);
    }
    result.x = un.x(&x, tau);
    result.s = un.s(&s, tau);
    result.z = un.z(&z, tau);
    result
}

#[allow(clippy::too_many_arguments)]
fn step(
    cones: &ConeSet,
    s: &[f64],
    ds: &[f64],
    z: &[f64],
    dz: &[f64],
    tau: f64,
    dtau: f64,
    kappa: f64,
    dkappa: f64,
) -> f64 {
    let mut alpha = cones.step_length(s, ds, 1.0 / STEP_FRACTION);
    alpha = alpha.min(cones.step_length(z, dz, 1.0 / STEP_FRACTION));
    if dtau < 0.0 {
        alpha = alpha.min(-tau / dtau);
    }
    if dkappa < 0.0 {
        alpha = alpha.min(-kappa / dkappa);
    }
    alpha.min(1.0)
}

/// Normalized `z` with `A^T z ~ 0` and `b^T z < 0`, in the original scaling.
fn primal_ray(un: &Unscaler<'_>, z: &[f64], tol: f64) -> Option<Vec<f64>> {
    let zu = un.z(z, 1.0);
    let nz = norm_inf(&zu);
    if !(nz > 0.0) {
        return None;
    }
    let zn: Vec<f64> = zu.iter().map(|v| v / nz).collect();
    let d = -dot(&un.sf.b, &zn);
    if !(d > 0.0) {
        return None;
    }
    let atz = norm_inf(&un.sf.a.mul_t(&zn));
    if atz <= tol * d.max(1.0) && d > tol {
        Some(zn)
    } else {
        None
    }
}

/// Normalized `(x, s)` with `A x + s ~ 0` and `c^T x < 0`, in the original scaling.
fn dual_ray(un: &Unscaler<'_>, x: &[f64], s: &[f64], tol: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let xu = un.x(x, 1.0);
    let su = un.s(s, 1.0);
    let nx = norm_inf(&xu).max(norm_inf(&su));
    if !(nx > 0.0) {
        return None;
    }
    let xn: Vec<f64> = xu.iter().map(|v| v / nx).collect();
    let sn: Vec<f64> = su.iter().map(|v| v / nx).collect();
    // the ray condition is homogeneous in c; measure it at unit cost scale
    let cn = norm_inf(&un.sf.c);
    if !(cn > 0.0) {
        return None;
    }
    let cx = -dot(&un.sf.c, &xn) / cn;
    if !(cx > tol) {
        return None;
    }
    let axs: Vec<f64> = un.sf.a.mul(&xn).iter().zip(&sn).map(|(a, b)| a + b).collect();
    if norm_inf(&axs) <= tol * cx.max(1.0) {
        Some((xn, sn))
    } else {
        None
    }
}
