//! Incremental acceptability testing of capacity configurations.
//!
//! A [`KnowledgeBase`] keeps the configurations found acceptable (generators
//! of the inner hull) and the feasibility cuts collected from infeasibility
//! certificates (which, with the box `[0, psi_max]`, bound the outer set).
//! A candidate is checked against the outer set first, then the inner hull,
//! and only then by a full conic solve whose outcome updates the knowledge.

use std::path::Path;
use std::sync::RwLock;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assemble::{build_acceptability, RiskParams};
use crate::conic::{solve, solve_lp_feasibility, Certificate, ConicProgram, LpOutcome, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::network::RadialNetwork;
use crate::scenario::ScenarioSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Acceptable,
    Unacceptable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    OuterCut,
    InnerHull,
    FullSolve,
}

/// Half-space `a^T psi <= b` valid for every acceptable configuration,
/// stored with `|a| = 1` when `a` is nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub a: Vec<f64>,
    pub b: f64,
    pub source_psi: Vec<f64>,
    pub certificate_digest: String,
}

impl Cut {
    /// `a^T psi - b`; positive means `psi` is cut off.
    pub fn value(&self, psi: &[f64]) -> f64 {
        self.a.iter().zip(psi).map(|(a, p)| a * p).sum::<f64>() - self.b
    }
}

/// The data a knowledge base is valid for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub network_digest: String,
    pub scenario_digest: String,
    pub nu: f64,
    pub gamma: f64,
}

impl Provenance {
    pub fn of(net: &RadialNetwork, scen: &ScenarioSet, risk: &RiskParams) -> Self {
        Provenance {
            network_digest: net.digest(),
            scenario_digest: scen.digest(),
            nu: risk.nu,
            gamma: risk.gamma,
        }
    }

    pub fn ensure_matches(&self, other: &Provenance) -> Result<()> {
        let mut diffs = Vec::new();
        if self.network_digest != other.network_digest {
            diffs.push("network");
        }
        if self.scenario_digest != other.scenario_digest {
            diffs.push("scenarios");
        }
        if self.nu.to_bits() != other.nu.to_bits() || self.gamma.to_bits() != other.gamma.to_bits() {
            diffs.push("risk levels");
        }
        if diffs.is_empty() {
            Ok(())
        } else {
            Err(Error::ProvenanceMismatch(format!(
                "knowledge base was built for different {}",
                diffs.join(", ")
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub decision: Decision,
    pub method: Method,
    pub seconds: f64,
}

/// Row of the per-method summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub label: String,
    pub count: usize,
    pub mean_seconds: f64,
    pub median_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KbStats {
    pub history: Vec<DecisionRecord>,
    pub shadow_checks: usize,
    pub shadow_disagreements: usize,
    /// Candidates both cut off and inside the hull (possible only through
    /// numerical noise); the outer decision was kept.
    pub conflicts: usize,
    /// Unacceptable full solves without a usable certificate.
    pub uncertified_rejections: usize,
}

impl KbStats {
    fn times(&self, method: Method, decision: Option<Decision>) -> Vec<f64> {
        self.history
            .iter()
            .filter(|r| r.method == method && decision.is_none_or(|d| r.decision == d))
            .map(|r| r.seconds)
            .collect()
    }

    pub fn count(&self, method: Method) -> usize {
        self.history.iter().filter(|r| r.method == method).count()
    }

    /// Median decision time of `method`, if it was ever used.
    pub fn median_seconds(&self, method: Method) -> Option<f64> {
        median(self.times(method, None))
    }

    /// Counts and timings split like a results table: the two cheap tests,
    /// then full solves by outcome.
    pub fn summary(&self) -> Vec<MethodSummary> {
        let rows = [
            ("inner hull", Method::InnerHull, None),
            ("outer cuts", Method::OuterCut, None),
            ("full solve, acceptable", Method::FullSolve, Some(Decision::Acceptable)),
            ("full solve, unacceptable", Method::FullSolve, Some(Decision::Unacceptable)),
        ];
        rows.iter()
            .map(|&(label, m, d)| {
                let t = self.times(m, d);
                MethodSummary {
                    label: label.to_string(),
                    count: t.len(),
                    mean_seconds: if t.is_empty() { 0.0 } else { t.iter().sum::<f64>() / t.len() as f64 },
                    median_seconds: median(t).unwrap_or(0.0),
                }
            })
            .collect()
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub provenance: Provenance,
    /// Upper corner of the capacity box.
    pub psi_max: Vec<f64>,
    pub accepted: Vec<Vec<f64>>,
    pub rejected: Vec<Vec<f64>>,
    pub cuts: Vec<Cut>,
    pub stats: KbStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptOptions {
    /// A cut rejects `psi` only when `a^T psi - b` exceeds this.
    pub cut_eps: f64,
    /// Smallest violation of a new cut at its source configuration.
    pub cut_margin: f64,
    /// Cap on hull generators; `None` keeps all of them.
    pub max_generators: Option<usize>,
    /// Re-decide cheap decisions with a full solve and count disagreements.
    pub shadow_check: bool,
    pub solver: SolverOptions,
}

impl Default for AcceptOptions {
    fn default() -> Self {
        AcceptOptions {
            cut_eps: 1e-8,
            cut_margin: 1e-7,
            max_generators: None,
            shadow_check: false,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub decision: Decision,
    pub method: Method,
    pub seconds: f64,
    /// Solver status of the full solve, when one ran.
    pub status: Option<SolveStatus>,
    pub cut_added: bool,
    /// Full-solve decision of a shadow audit, when requested and conclusive.
    pub shadow: Option<Decision>,
}

impl TestOutcome {
    pub fn shadow_agrees(&self) -> bool {
        self.shadow.is_none_or(|d| d == self.decision)
    }
}

impl KnowledgeBase {
    pub fn new(net: &RadialNetwork, scen: &ScenarioSet, risk: &RiskParams) -> Self {
        KnowledgeBase {
            provenance: Provenance::of(net, scen, risk),
            psi_max: net.psi_max().to_vec(),
            accepted: Vec::new(),
            rejected: Vec::new(),
            cuts: Vec::new(),
            stats: KbStats::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.psi_max.len()
    }

    fn check_len(&self, psi: &[f64]) -> Result<()> {
        if psi.len() != self.dim() {
            return Err(Error::dims(format!(
                "psi has length {}, expected {}",
                psi.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Nesting and cut invariants: every accepted point satisfies every cut
    /// within `cut_eps`, and every cut cuts off its source.
    pub fn check_invariants(&self, cut_eps: f64) -> Result<()> {
        for (i, cut) in self.cuts.iter().enumerate() {
            if cut.a.len() != self.dim() || cut.source_psi.len() != self.dim() {
                return Err(Error::InvariantViolation(format!("cut {i} has the wrong dimension")));
            }
            if cut.value(&cut.source_psi) <= 0.0 {
                return Err(Error::InvariantViolation(format!("cut {i} does not cut off its source")));
            }
            for (j, p) in self.accepted.iter().enumerate() {
                let v = cut.value(p);
                if v > cut_eps {
                    return Err(Error::InvariantViolation(format!(
                        "accepted point {j} {p:?} violates cut {i} by {v:.3e}"
                    )));
                }
            }
        }
        if let Some(p) = self.accepted.iter().chain(&self.rejected).find(|p| p.len() != self.dim()) {
            return Err(Error::InvariantViolation(format!("stored point {p:?} has the wrong dimension")));
        }
        Ok(())
    }
}

/// Whether `psi` is a convex combination of the accepted configurations.
pub fn in_inner(kb: &KnowledgeBase, psi: &[f64]) -> Result<bool> {
    kb.check_len(psi)?;
    if kb.accepted.is_empty() {
        return Ok(false);
    }
    if kb.accepted.iter().any(|g| g.as_slice() == psi) {
        return Ok(true);
    }
    let d = kb.dim();
    let mut rows: Vec<Vec<f64>> = (0..d).map(|i| kb.accepted.iter().map(|g| g[i]).collect()).collect();
    rows.push(vec![1.0; kb.accepted.len()]);
    let mut rhs = psi.to_vec();
    rhs.push(1.0);
    let lower = vec![0.0; kb.accepted.len()];
    Ok(matches!(solve_lp_feasibility(&rows, &rhs, &lower)?, LpOutcome::Feasible(_)))
}

/// Whether `psi` lies outside the box or beyond some cut by more than `cut_eps`.
pub fn outside_outer(kb: &KnowledgeBase, psi: &[f64], cut_eps: f64) -> bool {
    if psi.iter().zip(&kb.psi_max).any(|(p, hi)| !(*p >= 0.0 && p <= hi)) {
        return true;
    }
    kb.cuts.iter().any(|c| c.value(psi) > cut_eps)
}

/// Turn an infeasibility certificate of `prog` (built at `source_psi`) into a cut.
pub fn make_cut(
    prog: &ConicProgram,
    cert: &Certificate,
    source_psi: &[f64],
    opts: &AcceptOptions,
) -> Result<Cut> {
    if cert.norm_inf() == 0.0 {
        return Err(Error::InvalidCertificate("zero certificate".into()));
    }
    let cert = cert.normalized();
    let (stat, cone) = prog.certificate_residuals(&cert)?;
    if stat > opts.solver.cert_tol || cone > opts.solver.cert_tol {
        return Err(Error::InvalidCertificate(format!(
            "dual residuals too large (stationarity {stat:.3e}, cone {cone:.3e})"
        )));
    }
    let (mut a, mut b) = prog.psi_terms().affine_form(&cert)?;
    if a.len() != source_psi.len() {
        return Err(Error::dims("certificate parameter dimension differs from psi"));
    }
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        a.iter_mut().for_each(|v| *v /= norm);
        b /= norm;
    }
    let cut = Cut {
        a,
        b,
        source_psi: source_psi.to_vec(),
        certificate_digest: certificate_digest(&cert),
    };
    let margin = cut.value(source_psi);
    if !(margin >= opts.cut_margin) {
        return Err(Error::InvalidCertificate(format!(
            "cut margin {margin:.3e} below {:.1e}",
            opts.cut_margin
        )));
    }
    Ok(cut)
}

fn certificate_digest(cert: &Certificate) -> String {
    let mut h = Sha256::new();
    let mut put = |v: &f64| h.update(v.to_bits().to_le_bytes());
    cert.lambda.iter().for_each(&mut put);
    cert.mu.iter().for_each(&mut put);
    for s in &cert.soc {
        put(&s.mu2);
        s.mu1.iter().for_each(&mut put);
    }
    hex::encode(h.finalize())
}

/// Result of a full acceptability solve, before it is committed to a knowledge base.
#[derive(Debug, Clone)]
pub enum FullVerdict {
    Acceptable,
    Rejected(Option<Cut>),
}

impl FullVerdict {
    pub fn decision(&self) -> Decision {
        match self {
            FullVerdict::Acceptable => Decision::Acceptable,
            FullVerdict::Rejected(_) => Decision::Unacceptable,
        }
    }
}

/// Solve the acceptability program at `psi`; no knowledge base involved.
pub fn full_solve(
    net: &RadialNetwork,
    scen: &ScenarioSet,
    risk: &RiskParams,
    psi: &[f64],
    opts: &AcceptOptions,
) -> Result<(FullVerdict, SolveStatus)> {
    let prog = build_acceptability(net, scen, risk, psi)?;
    let out = solve(&prog, &opts.solver);
    let verdict = match out.status {
        SolveStatus::Optimal => FullVerdict::Acceptable,
        SolveStatus::Infeasible => {
            let cert = out.certificate.as_ref().expect("infeasible outcome carries a certificate");
            match make_cut(&prog, cert, psi, opts) {
                Ok(cut) => FullVerdict::Rejected(Some(cut)),
                Err(e) => {
                    log::warn!("no cut from certificate at {psi:?}: {e}");
                    FullVerdict::Rejected(None)
                }
            }
        }
        SolveStatus::InfeasibleNoCertificate => {
            log::warn!("infeasible without certificate at {psi:?}: {}", out.message);
            FullVerdict::Rejected(None)
        }
        SolveStatus::Unbounded | SolveStatus::NumericalFailure => {
            return Err(Error::NumericalFailure(format!(
                "acceptability solve at {psi:?} ended with {:?}: {}",
                out.status, out.message
            )))
        }
    };
    Ok((verdict, out.status))
}

/// Decide `psi` from stored knowledge alone, if possible.
fn cheap_decision(kb: &KnowledgeBase, psi: &[f64], opts: &AcceptOptions) -> Result<Option<(Decision, Method)>> {
    if outside_outer(kb, psi, opts.cut_eps) {
        return Ok(Some((Decision::Unacceptable, Method::OuterCut)));
    }
    if in_inner(kb, psi)? {
        return Ok(Some((Decision::Acceptable, Method::InnerHull)));
    }
    Ok(None)
}

/// Apply a full-solve verdict, re-validating invariants first. `kb` is left
/// untouched on error.
pub fn commit(kb: &mut KnowledgeBase, psi: &[f64], verdict: &FullVerdict, opts: &AcceptOptions) -> Result<bool> {
    match verdict {
        FullVerdict::Acceptable => {
            if let Some((i, c)) = kb.cuts.iter().enumerate().find(|(_, c)| c.value(psi) > opts.cut_eps) {
                return Err(Error::InvariantViolation(format!(
                    "configuration {psi:?} solved acceptable but violates cut {i} (source {:?}) by {:.3e}; \
                     a certificate is inexact or the relaxed set is not convex",
                    c.source_psi,
                    c.value(psi)
                )));
            }
            kb.accepted.push(psi.to_vec());
            if let Some(cap) = opts.max_generators {
                if kb.accepted.len() > cap {
                    kb.accepted = farthest_points(&kb.accepted, cap);
                }
            }
            Ok(false)
        }
        FullVerdict::Rejected(cut) => {
            if let Some(cut) = cut {
                if let Some((j, p)) = kb.accepted.iter().enumerate().find(|(_, p)| cut.value(p) > opts.cut_eps) {
                    return Err(Error::InvariantViolation(format!(
                        "new cut from {psi:?} cuts off accepted point {j} {p:?} by {:.3e}",
                        cut.value(p)
                    )));
                }
                kb.cuts.push(cut.clone());
            } else {
                kb.stats.uncertified_rejections += 1;
            }
            kb.rejected.push(psi.to_vec());
            Ok(cut.is_some())
        }
    }
}

/// Greedy farthest-point subset of size `cap`, seeded with the point farthest
/// from the centroid. Order of the survivors follows the input.
fn farthest_points(points: &[Vec<f64>], cap: usize) -> Vec<Vec<f64>> {
    if points.len() <= cap {
        return points.to_vec();
    }
    if cap == 0 {
        return Vec::new();
    }
    let d = points[0].len();
    let centroid: Vec<f64> = (0..d)
        .map(|i| points.iter().map(|p| p[i]).sum::<f64>() / points.len() as f64)
        .collect();
    let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let first = (0..points.len())
        .max_by(|&i, &j| dist2(&points[i], &centroid).total_cmp(&dist2(&points[j], &centroid)))
        .unwrap_or(0);
    let mut chosen = vec![first];
    let mut nearest: Vec<f64> = points.iter().map(|p| dist2(p, &points[first])).collect();
    while chosen.len() < cap {
        let next = (0..points.len())
            .max_by(|&i, &j| nearest[i].total_cmp(&nearest[j]))
            .unwrap_or(0);
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            nearest[i] = nearest[i].min(dist2(p, &points[next]));
        }
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn shadow_decision(
    net: &RadialNetwork,
    scen: &ScenarioSet,
    risk: &RiskParams,
    psi: &[f64],
    opts: &AcceptOptions,
) -> Option<Decision> {
    match full_solve(net, scen, risk, psi, opts) {
        Ok((v, _)) => Some(v.decision()),
        Err(e) => {
            log::warn!("shadow solve inconclusive at {psi:?}: {e}");
            None
        }
    }
}

fn record_shadow(kb: &mut KnowledgeBase, psi: &[f64], decision: Decision, shadow: Option<Decision>) {
    if let Some(s) = shadow {
        kb.stats.shadow_checks += 1;
        if s != decision {
            kb.stats.shadow_disagreements += 1;
            log::error!("shadow solve disagrees at {psi:?}: cheap test said {decision:?}, full solve {s:?}");
        }
    }
}

/// Test one candidate, updating `kb`.
pub fn test(
    kb: &mut KnowledgeBase,
    net: &RadialNetwork,
    scen: &ScenarioSet,
    risk: &RiskParams,
    psi: &[f64],
    opts: &AcceptOptions,
) -> Result<TestOutcome> {
    kb.provenance.ensure_matches(&Provenance::of(net, scen, risk))?;
    kb.check_len(psi)?;
    let start = Instant::now();
    if let Some((decision, method)) = cheap_decision(kb, psi, opts)? {
        let seconds = start.elapsed().as_secs_f64();
        if method == Method::OuterCut && !kb.accepted.is_empty() && in_inner(kb, psi)? {
            kb.stats.conflicts += 1;
            log::warn!("{psi:?} is inside the hull and beyond a cut; keeping the outer decision");
        }
        let shadow = if opts.shadow_check {
            shadow_decision(net, scen, risk, psi, opts)
        } else {
            None
        };
        record_shadow(kb, psi, decision, shadow);
        kb.stats.history.push(DecisionRecord {
            decision,
            method,
            seconds,
        });
        return Ok(TestOutcome {
            decision,
            method,
            seconds,
            status: None,
            cut_added: false,
            shadow,
        });
    }
    let (verdict, status) = full_solve(net, scen, risk, psi, opts)?;
    let cut_added = commit(kb, psi, &verdict, opts)?;
    let seconds = start.elapsed().as_secs_f64();
    let decision = verdict.decision();
    kb.stats.history.push(DecisionRecord {
        decision,
        method: Method::FullSolve,
        seconds,
    });
    Ok(TestOutcome {
        decision,
        method: Method::FullSolve,
        seconds,
        status: Some(status),
        cut_added,
        shadow: None,
    })
}

/// Test every corner of the capacity box (at most `2^16` of them).
pub fn seed_corners(
    kb: &mut KnowledgeBase,
    net: &RadialNetwork,
    scen: &ScenarioSet,
    risk: &RiskParams,
    opts: &AcceptOptions,
) -> Result<Vec<TestOutcome>> {
    let d = kb.dim();
    if d > 16 {
        return Err(Error::dims(format!("{d} dimensions give too many corners")));
    }
    let hi = kb.psi_max.clone();
    (0..1usize << d)
        .map(|mask| {
            let psi: Vec<f64> = (0..d).map(|i| if mask >> i & 1 == 1 { hi[i] } else { 0.0 }).collect();
            test(kb, net, scen, risk, &psi, opts)
        })
        .collect()
}

/// A knowledge base shared between threads. Cheap checks take a read lock,
/// full solves run unlocked, and the update re-validates under the write lock.
#[derive(Debug)]
pub struct SharedKnowledgeBase {
    inner: RwLock<KnowledgeBase>,
}

impl SharedKnowledgeBase {
    pub fn new(kb: KnowledgeBase) -> Self {
        SharedKnowledgeBase { inner: RwLock::new(kb) }
    }

    pub fn into_inner(self) -> KnowledgeBase {
        self.inner.into_inner().unwrap_or_else(|e| e.into_inner())
    }

    pub fn snapshot(&self) -> KnowledgeBase {
        self.inner.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn test(
        &self,
        net: &RadialNetwork,
        scen: &ScenarioSet,
        risk: &RiskParams,
        psi: &[f64],
        opts: &AcceptOptions,
    ) -> Result<TestOutcome> {
        let start = Instant::now();
        {
            let kb = self.inner.read().unwrap_or_else(|e| e.into_inner());
            kb.provenance.ensure_matches(&Provenance::of(net, scen, risk))?;
            kb.check_len(psi)?;
            if let Some((decision, method)) = cheap_decision(&kb, psi, opts)? {
                let seconds = start.elapsed().as_secs_f64();
                drop(kb);
                let mut kb = self.inner.write().unwrap_or_else(|e| e.into_inner());
                kb.stats.history.push(DecisionRecord {
                    decision,
                    method,
                    seconds,
                });
                return Ok(TestOutcome {
                    decision,
                    method,
                    seconds,
                    status: None,
                    cut_added: false,
                    shadow: None,
                });
            }
        }
        let (verdict, status) = full_solve(net, scen, risk, psi, opts)?;
        let mut kb = self.inner.write().unwrap_or_else(|e| e.into_inner());
        let cut_added = commit(&mut kb, psi, &verdict, opts)?;
        let seconds = start.elapsed().as_secs_f64();
        let decision = verdict.decision();
        kb.stats.history.push(DecisionRecord {
            decision,
            method: Method::FullSolve,
            seconds,
        });
        Ok(TestOutcome {
            decision,
            method: Method::FullSolve,
            seconds,
            status: Some(status),
            cut_added,
            shadow: None,
        })
    }
}

/// JSON text of `kb` with sorted keys.
pub fn kb_to_json(kb: &KnowledgeBase) -> Result<String> {
    Ok(serde_json::to_string_pretty(&serde_json::to_value(kb)?)?)
}

pub fn save_kb(kb: &KnowledgeBase, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, kb_to_json(kb)? + "\n").map_err(|e| Error::io(path, e))
}

/// Read a knowledge base and check its internal invariants.
pub fn read_kb(path: impl AsRef<Path>) -> Result<KnowledgeBase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let kb: KnowledgeBase = serde_json::from_str(&text).map_err(|e| Error::parse(Some(e.line()), e.to_string()))?;
    kb.check_invariants(AcceptOptions::default().cut_eps)?;
    Ok(kb)
}

/// Read a knowledge base and require that it was built for `expected`.
pub fn load_kb(path: impl AsRef<Path>, expected: &Provenance) -> Result<KnowledgeBase> {
    let kb = read_kb(path)?;
    kb.provenance.ensure_matches(expected)?;
    Ok(kb)
}
