//! Conic programs over linear equalities, linear inequalities and
//! second-order cones, plus the reference interior-point solver.
//!
//! A [`ConicProgram`] reads
//!
//! ```text
//! minimize    c^T x
//! subject to  A_eq x = b_eq(psi)          b_eq(psi) = rhs + C_psi psi
//!             A_in x <= b_in
//!             || F_i x + G_i || <= f_i^T x + g_i
//! ```
//!
//! where the equality right-hand side may depend affinely on a parameter
//! vector `psi` that is not a decision variable. When the program is
//! infeasible the solver returns multipliers `(lambda, mu, mu1_i, mu2_i)`
//! with `mu >= 0`, `(mu1_i, mu2_i)` in the cone,
//!
//! ```text
//! A_in^T mu = A_eq^T lambda + sum_i (F_i^T mu1_i + f_i mu2_i)
//! ```
//!
//! and a strictly positive value of
//!
//! ```text
//! D(psi) = b_eq(psi)^T lambda - b_in^T mu - sum_i (G_i^T mu1_i + g_i mu2_i),
//! ```
//!
//! which is affine in `psi` and certifies infeasibility wherever it is positive.

mod cones;
mod dump;
mod equilibrate;
mod ipm;
mod kkt;
mod ldl;
mod lp;
mod sparse;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cones::Cone;
pub use dump::{read_dump, write_dump};
pub use ipm::{IpmStatus, StandardForm};
pub use lp::{solve_lp_feasibility, LpOutcome};
pub use sparse::CscMatrix;

/// Sparse affine functional `coeffs^T x + constant`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffineRow {
    pub coeffs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineRow {
    pub fn new(coeffs: Vec<(usize, f64)>, constant: f64) -> Self {
        AffineRow { coeffs, constant }
    }

    pub fn constant(value: f64) -> Self {
        AffineRow {
            coeffs: Vec::new(),
            constant: value,
        }
    }

    /// The single variable `x_j`.
    pub fn var(j: usize) -> Self {
        AffineRow {
            coeffs: vec![(j, 1.0)],
            constant: 0.0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|&(j, a)| a * x[j]).sum::<f64>()
    }

    pub fn scaled(&self, k: f64) -> Self {
        AffineRow {
            coeffs: self.coeffs.iter().map(|&(j, a)| (j, k * a)).collect(),
            constant: k * self.constant,
        }
    }

    /// `self + k * other`, merging repeated variables.
    pub fn add_scaled(&self, k: f64, other: &AffineRow) -> Self {
        let mut coeffs = self.coeffs.clone();
        for &(j, a) in &other.coeffs {
            match coeffs.iter_mut().find(|(i, _)| *i == j) {
                Some(entry) => entry.1 += k * a,
                None => coeffs.push((j, k * a)),
            }
        }
        AffineRow {
            coeffs,
            constant: self.constant + k * other.constant,
        }
    }
}

/// What a constraint row encodes; used by dumps, size reports and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowClass {
    CapacityUpper,
    CapacityLower,
    RealBalance,
    ReactiveBalance,
    VoltageDrop,
    SubstationVoltage,
    UpperVoltageCvar,
    LowerVoltageCvar,
    FlowCvar,
    UpperVoltageTail,
    LowerVoltageTail,
    SlackNonneg,
    FlowSlackNonneg,
    LossRelaxation,
    FlowHinge,
    Generic,
}

/// `coeffs^T x = rhs + psi_coeffs^T psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualityRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub psi_coeffs: Vec<(usize, f64)>,
    pub class: RowClass,
}

/// `coeffs^T x <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub class: RowClass,
}

/// `|| tail(x) || <= head(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocBlock {
    pub head: AffineRow,
    pub tail: Vec<AffineRow>,
    pub class: RowClass,
}

impl SocBlock {
    pub fn dim(&self) -> usize {
        1 + self.tail.len()
    }

    /// `||tail(x)|| - head(x)`; nonpositive for members.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let t: f64 = self.tail.iter().map(|r| r.eval(x).powi(2)).sum::<f64>().sqrt();
        t - self.head.eval(x)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.violation(x) <= tol
    }
}

/// Rotated cone `z1 z2 >= Z1^2 + Z2^2, z1 + z2 >= 0` as a second-order cone:
/// `||(2 Z1, 2 Z2, z1 - z2)|| <= z1 + z2`.
pub fn soc_rotated(z1: &AffineRow, z2: &AffineRow, big_z1: &AffineRow, big_z2: &AffineRow) -> SocBlock {
    SocBlock {
        head: z1.add_scaled(1.0, z2),
        tail: vec![big_z1.scaled(2.0), big_z2.scaled(2.0), z1.add_scaled(-1.0, z2)],
        class: RowClass::Generic,
    }
}

/// Model-level meaning of a decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    Psi,
    P,
    Q,
    L,
    W,
    UpperAnchor,
    LowerAnchor,
    FlowAnchor,
    UpperSlack,
    LowerSlack,
    FlowSlack,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarLabel {
    pub kind: VarKind,
    /// Scenario index for per-scenario variables.
    pub scenario: Option<usize>,
    /// Bus or line index (0-based) within the block.
    pub index: usize,
}

impl fmt::Display for VarLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.scenario {
            Some(k) => write!(f, "{:?}[{}]@{}", self.kind, self.index, k),
            None => write!(f, "{:?}[{}]", self.kind, self.index),
        }
    }
}

/// A conic program; see the module docs for the meaning of each block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConicProgram {
    pub objective: Vec<f64>,
    pub labels: Vec<VarLabel>,
    pub equalities: Vec<EqualityRow>,
    pub inequalities: Vec<InequalityRow>,
    pub cones: Vec<SocBlock>,
    /// Parameter value substituted into the equality right-hand sides.
    pub psi: Vec<f64>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_var(&mut self, label: VarLabel, cost: f64) -> usize {
        self.objective.push(cost);
        self.labels.push(label);
        self.objective.len() - 1
    }

    pub fn add_generic_var(&mut self, cost: f64) -> usize {
        let index = self.num_vars();
        self.add_var(
            VarLabel {
                kind: VarKind::Generic,
                scenario: None,
                index,
            },
            cost,
        )
    }

    pub fn add_equality(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64, class: RowClass) {
        self.equalities.push(EqualityRow {
            coeffs,
            rhs,
            psi_coeffs: Vec::new(),
            class,
        });
    }

    pub fn add_inequality(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64, class: RowClass) {
        self.inequalities.push(InequalityRow { coeffs, rhs, class });
    }

    pub fn add_cone(&mut self, mut block: SocBlock, class: RowClass) {
        block.class = class;
        self.cones.push(block);
    }

    /// Right-hand side of equality `r` at the stored parameter value.
    pub fn equality_rhs(&self, r: usize) -> f64 {
        let row = &self.equalities[r];
        row.rhs
            + row
                .psi_coeffs
                .iter()
                .map(|&(j, a)| a * self.psi[j])
                .sum::<f64>()
    }

    /// Position of the variable carrying `label`.
    pub fn index_of(&self, label: &VarLabel) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Dimension and index consistency; labels must be distinct.
    pub fn check(&self) -> Result<()> {
        let n = self.num_vars();
        if self.labels.len() != n {
            return Err(Error::dims("label count differs from variable count"));
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        if let Some(dup) = self.labels.iter().find(|l| !seen.insert(**l)) {
            return Err(Error::dims(format!("variable label {dup} used twice")));
        }
        let bad_idx = |coeffs: &[(usize, f64)]| coeffs.iter().any(|&(j, a)| j >= n || !a.is_finite());
        for (r, row) in self.equalities.iter().enumerate() {
            if bad_idx(&row.coeffs) || !row.rhs.is_finite() {
                return Err(Error::dims(format!("equality {r} is malformed")));
            }
            if row.psi_coeffs.iter().any(|&(j, _)| j >= self.psi.len()) {
                return Err(Error::dims(format!("equality {r} references psi outside its length")));
            }
        }
        for (r, row) in self.inequalities.iter().enumerate() {
            if bad_idx(&row.coeffs) || !row.rhs.is_finite() {
                return Err(Error::dims(format!("inequality {r} is malformed")));
            }
        }
        for (i, c) in self.cones.iter().enumerate() {
            if c.tail.is_empty() {
                return Err(Error::dims(format!("cone {i} has an empty norm part")));
            }
            if std::iter::once(&c.head).chain(&c.tail).any(|r| bad_idx(&r.coeffs) || !r.constant.is_finite()) {
                return Err(Error::dims(format!("cone {i} is malformed")));
            }
        }
        Ok(())
    }

    /// Largest violation of each block at `x`: `(equalities, inequalities, cones)`.
    pub fn residuals(&self, x: &[f64]) -> (f64, f64, f64) {
        let eq = (0..self.equalities.len())
            .map(|r| {
                let row = &self.equalities[r];
                let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
                (lhs - self.equality_rhs(r)).abs()
            })
            .fold(0.0, f64::max);
        let ineq = self
            .inequalities
            .iter()
            .map(|row| row.coeffs.iter().map(|&(j, a)| a * x[j]).sum::<f64>() - row.rhs)
            .fold(0.0, f64::max);
        let soc = self.cones.iter().map(|c| c.violation(x)).fold(0.0, f64::max);
        (eq, ineq, soc)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Standard form `A x + s = b, s in K` with rows ordered equalities,
    /// inequalities, then each cone (head first).
    pub fn to_standard_form(&self) -> StandardForm {
        let n = self.num_vars();
        let mut trip = Vec::new();
        let mut b = Vec::new();
        let mut cones = Vec::new();
        let mut row = 0;
        for (r, eq) in self.equalities.iter().enumerate() {
            trip.extend(eq.coeffs.iter().map(|&(j, a)| (row, j, a)));
            b.push(self.equality_rhs(r));
            row += 1;
        }
        if !self.equalities.is_empty() {
            cones.push(Cone::Zero(self.equalities.len()));
        }
        for ineq in &self.inequalities {
            trip.extend(ineq.coeffs.iter().map(|&(j, a)| (row, j, a)));
            b.push(ineq.rhs);
            row += 1;
        }
        if !self.inequalities.is_empty() {
            cones.push(Cone::NonNeg(self.inequalities.len()));
        }
        for block in &self.cones {
            for r in std::iter::once(&block.head).chain(&block.tail) {
                trip.extend(r.coeffs.iter().map(|&(j, a)| (row, j, -a)));
                b.push(r.constant);
                row += 1;
            }
            cones.push(Cone::Soc(block.dim()));
        }
        StandardForm {
            a: CscMatrix::from_triplets(row, n, &trip),
            b,
            c: self.objective.clone(),
            cones,
        }
    }

    /// Split a standard-form dual vector into certificate blocks.
    pub fn certificate_from_dual(&self, z: &[f64]) -> Certificate {
        let p = self.equalities.len();
        let q = self.inequalities.len();
        let lambda = z[..p].iter().map(|v| -v).collect();
        let mu = z[p..p + q].to_vec();
        let mut soc = Vec::with_capacity(self.cones.len());
        let mut off = p + q;
        for block in &self.cones {
            let d = block.dim();
            soc.push(SocMultiplier {
                mu2: z[off],
                mu1: z[off + 1..off + d].to_vec(),
            });
            off += d;
        }
        Certificate { lambda, mu, soc }
    }

    /// Parameter-dependent data needed to evaluate certificates at any `psi`.
    pub fn psi_terms(&self) -> PsiTerms {
        PsiTerms {
            psi_dim: self.psi.len(),
            c_psi: self.equalities.iter().map(|r| r.psi_coeffs.clone()).collect(),
            e_psi: self.equalities.iter().map(|r| -r.rhs).collect(),
            e: self.inequalities.iter().map(|r| r.rhs).collect(),
            g: self.cones.iter().map(|c| c.head.constant).collect(),
            g_tail: self
                .cones
                .iter()
                .map(|c| c.tail.iter().map(|r| r.constant).collect())
                .collect(),
        }
    }

    /// Dual feasibility of a certificate: `(stationarity, cone violation)`.
    pub fn certificate_residuals(&self, cert: &Certificate) -> Result<(f64, f64)> {
        self.check_certificate_dims(cert)?;
        let mut grad = vec![0.0; self.num_vars()];
        for (row, &l) in self.equalities.iter().zip(&cert.lambda) {
            for &(j, a) in &row.coeffs {
                grad[j] -= a * l;
            }
        }
        for (row, &m) in self.inequalities.iter().zip(&cert.mu) {
            for &(j, a) in &row.coeffs {
                grad[j] += a * m;
            }
        }
        for (block, mult) in self.cones.iter().zip(&cert.soc) {
            for &(j, a) in &block.head.coeffs {
                grad[j] -= a * mult.mu2;
            }
            for (r, &m1) in block.tail.iter().zip(&mult.mu1) {
                for &(j, a) in &r.coeffs {
                    grad[j] -= a * m1;
                }
            }
        }
        let stationarity = sparse::norm_inf(&grad);
        let mut cone = cert.mu.iter().fold(0.0_f64, |m, v| m.max(-v));
        for mult in &cert.soc {
            let t: f64 = mult.mu1.iter().map(|v| v * v).sum::<f64>().sqrt();
            cone = cone.max(t - mult.mu2);
        }
        Ok((stationarity, cone))
    }

    fn check_certificate_dims(&self, cert: &Certificate) -> Result<()> {
        if cert.lambda.len() != self.equalities.len()
            || cert.mu.len() != self.inequalities.len()
            || cert.soc.len() != self.cones.len()
            || cert.soc.iter().zip(&self.cones).any(|(m, c)| m.mu1.len() != c.tail.len())
        {
            return Err(Error::dims("certificate does not match program blocks"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocMultiplier {
    pub mu2: f64,
    pub mu1: Vec<f64>,
}

/// Multipliers `(lambda, mu, {mu1_i, mu2_i})` of an infeasibility certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub soc: Vec<SocMultiplier>,
}

impl Certificate {
    /// All-zero multipliers shaped like `prog`.
    pub fn zeros_like(prog: &ConicProgram) -> Self {
        Certificate {
            lambda: vec![0.0; prog.equalities.len()],
            mu: vec![0.0; prog.inequalities.len()],
            soc: prog
                .cones
                .iter()
                .map(|c| SocMultiplier {
                    mu2: 0.0,
                    mu1: vec![0.0; c.tail.len()],
                })
                .collect(),
        }
    }

    pub fn norm_inf(&self) -> f64 {
        let mut m = sparse::norm_inf(&self.lambda).max(sparse::norm_inf(&self.mu));
        for s in &self.soc {
            m = m.max(s.mu2.abs()).max(sparse::norm_inf(&s.mu1));
        }
        m
    }

    pub fn scaled(&self, k: f64) -> Self {
        Certificate {
            lambda: self.lambda.iter().map(|v| k * v).collect(),
            mu: self.mu.iter().map(|v| k * v).collect(),
            soc: self
                .soc
                .iter()
                .map(|s| SocMultiplier {
                    mu2: k * s.mu2,
                    mu1: s.mu1.iter().map(|v| k * v).collect(),
                })
                .collect(),
        }
    }

    /// Rescale to unit infinity norm (unchanged if all zero).
    pub fn normalized(&self) -> Self {
        let n = self.norm_inf();
        if n > 0.0 {
            self.scaled(1.0 / n)
        } else {
            self.clone()
        }
    }
}

/// The data `(C_psi, E_psi, E, G_i, g_i)` through which a certificate's dual
/// objective depends on `psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTerms {
    pub psi_dim: usize,
    /// Sparse `C_psi` rows, one per equality.
    pub c_psi: Vec<Vec<(usize, f64)>>,
    /// `E_psi`, so that `b_eq(psi) = C_psi psi - E_psi`.
    pub e_psi: Vec<f64>,
    /// Inequality right-hand side `E` (`b_in`).
    pub e: Vec<f64>,
    /// Cone head constants `g_i`.
    pub g: Vec<f64>,
    /// Cone tail constants `G_i`.
    pub g_tail: Vec<Vec<f64>>,
}

impl PsiTerms {
    /// Affine form `D(psi) = a^T psi - b` of a certificate.
    pub fn affine_form(&self, cert: &Certificate) -> Result<(Vec<f64>, f64)> {
        if cert.lambda.len() != self.c_psi.len()
            || cert.mu.len() != self.e.len()
            || cert.soc.len() != self.g.len()
            || cert.soc.iter().zip(&self.g_tail).any(|(m, g)| m.mu1.len() != g.len())
        {
            return Err(Error::dims("certificate does not match the program's psi terms"));
        }
        let mut a = vec![0.0; self.psi_dim];
        let mut b = 0.0;
        for (r, &l) in cert.lambda.iter().enumerate() {
            for &(j, c) in &self.c_psi[r] {
                a[j] += c * l;
            }
            b += self.e_psi[r] * l;
        }
        b += self.e.iter().zip(&cert.mu).map(|(e, m)| e * m).sum::<f64>();
        for (i, mult) in cert.soc.iter().enumerate() {
            b += self.g[i] * mult.mu2;
            b += self.g_tail[i].iter().zip(&mult.mu1).map(|(g, m)| g * m).sum::<f64>();
        }
        Ok((a, b))
    }
}

/// Dual objective `D(lambda, mu, mu1, mu2; psi)` of a certificate.
pub fn dual_objective(cert: &Certificate, terms: &PsiTerms, psi: &[f64]) -> Result<f64> {
    if psi.len() != terms.psi_dim {
        return Err(Error::dims(format!(
            "psi has length {}, expected {}",
            psi.len(),
            terms.psi_dim
        )));
    }
    let (a, b) = terms.affine_form(cert)?;
    Ok(a.iter().zip(psi).map(|(x, y)| x * y).sum::<f64>() - b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    InfeasibleNoCertificate,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Stationarity tolerance of a normalized infeasibility ray during detection.
    pub infeas_tol: f64,
    /// Stationarity tolerance a returned certificate must meet (`10 * feas_tol` by default).
    pub cert_tol: f64,
    pub equilibrate_iters: usize,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_iter: 200,
            infeas_tol: 1e-9,
            cert_tol: 1e-7,
            equilibrate_iters: 10,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub x: Option<Vec<f64>>,
    /// Standard-form dual vector at optimality.
    pub dual: Option<Vec<f64>>,
    pub certificate: Option<Certificate>,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub message: String,
}

/// Anything that can solve a [`ConicProgram`] under the certificate contract.
pub trait ConicBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, prog: &ConicProgram, opts: &SolverOptions) -> SolveOutcome;
}

/// The built-in homogeneous self-dual interior-point solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceSolver;

impl ConicBackend for ReferenceSolver {
    fn name(&self) -> &str {
        "hostcap-hsde"
    }

    fn solve(&self, prog: &ConicProgram, opts: &SolverOptions) -> SolveOutcome {
        if let Err(e) = prog.check() {
            return failure(format!("malformed program: {e}"));
        }
        let sf = prog.to_standard_form();
        let res = ipm::solve_standard(&sf, opts);
        let mut out = SolveOutcome {
            status: SolveStatus::NumericalFailure,
            x: None,
            dual: None,
            certificate: None,
            objective: None,
            iterations: res.iterations,
            primal_residual: res.pres,
            dual_residual: res.dres,
            gap: res.gap,
            message: res.message.clone(),
        };
        match res.status {
            IpmStatus::Optimal => {
                out.status = SolveStatus::Optimal;
                out.objective = Some(prog.objective_value(&res.x));
                out.x = Some(res.x);
                out.dual = Some(res.z);
            }
            IpmStatus::PrimalInfeasible => {
                let cert = prog.certificate_from_dual(&res.z).normalized();
                let terms = prog.psi_terms();
                let checked = prog
                    .certificate_residuals(&cert)
                    .and_then(|r| Ok((r, dual_objective(&cert, &terms, &prog.psi)?)));
                match checked {
                    Ok(((stat, cone), value))
                        if stat <= opts.cert_tol && cone <= opts.cert_tol && value > 0.0 =>
                    {
                        out.status = SolveStatus::Infeasible;
                        out.certificate = Some(cert);
                    }
                    Ok(((stat, cone), value)) => {
                        out.status = SolveStatus::InfeasibleNoCertificate;
                        out.message = format!(
                            "infeasibility ray failed validation (stationarity {stat:e}, cone {cone:e}, dual objective {value:e})"
                        );
                    }
                    Err(e) => {
                        out.status = SolveStatus::InfeasibleNoCertificate;
                        out.message = e.to_string();
                    }
                }
            }
            IpmStatus::DualInfeasible => out.status = SolveStatus::Unbounded,
            IpmStatus::MaxIterations | IpmStatus::NumericalError | IpmStatus::Stalled => {
                out.status = SolveStatus::NumericalFailure;
            }
        }
        out
    }
}

fn failure(message: String) -> SolveOutcome {
    SolveOutcome {
        status: SolveStatus::NumericalFailure,
        x: None,
        dual: None,
        certificate: None,
        objective: None,
        iterations: 0,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        gap: f64::NAN,
        message,
    }
}

/// Solve with the reference solver.
pub fn solve(prog: &ConicProgram, opts: &SolverOptions) -> SolveOutcome {
    ReferenceSolver.solve(prog, opts)
}
