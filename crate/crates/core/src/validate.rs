//! Post-hoc checks of a capacity solution: tightness of the loss relaxation,
//! closed-form CVaR of the constrained quantities, and empirical violation
//! frequencies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assemble::RiskParams;
use crate::cvar::{cvar, cvar_objective, violation_fraction};
use crate::error::{Error, Result};
use crate::hca::HcResult;
use crate::network::{FlowState, RadialNetwork};
use crate::scenario::ScenarioSet;

pub const DEFAULT_EXACTNESS_TOL: f64 = 1e-6;
pub const DEFAULT_FEAS_TOL: f64 = 1e-8;
/// Slack allowed when comparing a closed-form CVaR with its limit.
pub const CVAR_TOL: f64 = 1e-6;

/// `W_from L - P^2 - Q^2` for every scenario (rows) and line (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationGap {
    pub gaps: Vec<Vec<f64>>,
    pub max_gap: f64,
    pub min_gap: f64,
    pub exactness_tol: f64,
    /// `(scenario, line)` pairs where the gap exceeds `exactness_tol`.
    pub loose: Vec<(usize, usize)>,
}

impl RelaxationGap {
    pub fn is_tight(&self) -> bool {
        self.loose.is_empty()
    }

    pub fn direction_ok(&self, feas_tol: f64) -> bool {
        self.min_gap >= -feas_tol
    }
}

pub fn relaxation_gap_of(net: &RadialNetwork, states: &[FlowState], exactness_tol: f64) -> RelaxationGap {
    let gaps: Vec<Vec<f64>> = states
        .par_iter()
        .map(|s| {
            net.lines()
                .iter()
                .enumerate()
                .map(|(e, ln)| s.w[ln.from] * s.l[e] - s.p[e] * s.p[e] - s.q[e] * s.q[e])
                .collect()
        })
        .collect();
    let flat = || gaps.iter().flatten().copied();
    let loose = gaps
        .iter()
        .enumerate()
        .flat_map(|(k, row)| row.iter().enumerate().filter(|(_, g)| **g > exactness_tol).map(move |(e, _)| (k, e)))
        .collect();
    RelaxationGap {
        max_gap: flat().reduce(f64::max).unwrap_or(0.0),
        min_gap: flat().reduce(f64::min).unwrap_or(0.0),
        exactness_tol,
        loose,
        gaps,
    }
}

pub fn relaxation_gap(result: &HcResult, net: &RadialNetwork) -> RelaxationGap {
    relaxation_gap_of(net, &result.flow_states, DEFAULT_EXACTNESS_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitKind {
    UpperVoltage,
    LowerVoltage,
    Flow,
}

impl LimitKind {
    fn name(self) -> &'static str {
        match self {
            LimitKind::UpperVoltage => "upper_voltage",
            LimitKind::LowerVoltage => "lower_voltage",
            LimitKind::Flow => "flow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub kind: LimitKind,
    /// 1-based bus number for voltage limits, 1-based line number for flows.
    pub index: usize,
    pub fraction: f64,
    /// `1 - nu` or `1 - gamma`.
    pub bound: f64,
}

/// Violation fractions of every tracked limit: both voltage limits at each
/// non-substation bus and the flow limit of each line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationHistogram {
    pub rows: Vec<HistogramRow>,
}

impl ViolationHistogram {
    pub fn within_bounds(&self) -> bool {
        self.rows.iter().all(|r| r.fraction <= r.bound)
    }

    pub fn voltage_limits(&self) -> usize {
        self.rows.iter().filter(|r| r.kind != LimitKind::Flow).count()
    }

    pub fn flow_limits(&self) -> usize {
        self.rows.iter().filter(|r| r.kind == LimitKind::Flow).count()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::NumericalFailure(format!("csv encoding: {e}"));
        w.write_record(["kind", "index", "fraction", "bound"]).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.kind.name().to_string(),
                r.index.to_string(),
                format!("{:?}", r.fraction),
                format!("{:?}", r.bound),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::NumericalFailure(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// A small matplotlib script that draws cumulative-frequency curves of the
/// violation fractions in `csv_path`, with the bound marked.
pub fn plot_script(csv_path: &str) -> String {
    format!(
        r#"# Cumulative frequency of violation fractions.
import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open({csv_path:?})))
fig, ax = plt.subplots()
for kind in ("upper_voltage", "lower_voltage", "flow"):
    xs = sorted(float(r["fraction"]) for r in rows if r["kind"] == kind)
    if xs:
        ax.step(xs, [(i + 1) / len(xs) for i in range(len(xs))], where="post", label=kind)
        bound = float(next(r["bound"] for r in rows if r["kind"] == kind))
        ax.axvline(bound, linestyle="--", color="grey")
ax.set_xlabel("fraction of scenarios violating the limit")
ax.set_ylabel("cumulative frequency")
ax.legend()
fig.savefig({out:?})
"#,
        out = format!("{csv_path}.png")
    )
}

fn check_states(result: &HcResult, scen: &ScenarioSet, net: &RadialNetwork) -> Result<()> {
    if result.flow_states.len() != scen.len() {
        return Err(Error::dims(format!(
            "result has {} flow states for {} scenarios",
            result.flow_states.len(),
            scen.len()
        )));
    }
    if result.flow_states.iter().any(|s| s.w.len() != net.n() || s.p.len() != net.num_lines()) {
        return Err(Error::dims("flow states do not match the network"));
    }
    Ok(())
}

pub fn violation_histogram(result: &HcResult, scen: &ScenarioSet, net: &RadialNetwork) -> Result<ViolationHistogram> {
    check_states(result, scen, net)?;
    Ok(histogram_of(net, &result.flow_states, &result.risk()))
}

pub fn histogram_of(net: &RadialNetwork, states: &[FlowState], risk: &RiskParams) -> ViolationHistogram {
    let mut rows = Vec::new();
    for j in 1..net.n() {
        let w: Vec<f64> = states.iter().map(|s| s.w[j]).collect();
        rows.push(HistogramRow {
            kind: LimitKind::UpperVoltage,
            index: j + 1,
            fraction: violation_fraction(&w, net.w_max()[j]),
            bound: 1.0 - risk.nu,
        });
        let neg: Vec<f64> = w.iter().map(|v| -v).collect();
        rows.push(HistogramRow {
            kind: LimitKind::LowerVoltage,
            index: j + 1,
            fraction: violation_fraction(&neg, -net.w_min()[j]),
            bound: 1.0 - risk.nu,
        });
    }
    for (e, ln) in net.lines().iter().enumerate() {
        let s2: Vec<f64> = states.iter().map(|s| s.p[e] * s.p[e] + s.q[e] * s.q[e]).collect();
        rows.push(HistogramRow {
            kind: LimitKind::Flow,
            index: e + 1,
            fraction: violation_fraction(&s2, ln.s_max * ln.s_max),
            bound: 1.0 - risk.gamma,
        });
    }
    ViolationHistogram { rows }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvarEntry {
    pub kind: LimitKind,
    /// 0-based bus for voltage limits (substation included), 0-based line for flows.
    pub index: usize,
    /// Closed-form CVaR of the constrained quantity (`-W` for the lower limit).
    pub cvar: f64,
    /// Limit on that quantity (`-W_min` for the lower limit).
    pub limit: f64,
    /// Variational objective evaluated at the solver's anchor variable.
    pub anchor_objective: f64,
}

impl CvarEntry {
    pub fn margin(&self) -> f64 {
        self.limit - self.cvar
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvarRecheck {
    pub entries: Vec<CvarEntry>,
    pub tol: f64,
}

impl CvarRecheck {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.cvar <= e.limit + self.tol * (1.0 + e.limit.abs()))
    }

    pub fn min_margin(&self) -> f64 {
        self.entries.iter().map(CvarEntry::margin).fold(f64::INFINITY, f64::min)
    }
}

pub fn recheck_cvar(
    result: &HcResult,
    scen: &ScenarioSet,
    net: &RadialNetwork,
    risk: &RiskParams,
) -> Result<CvarRecheck> {
    check_states(result, scen, net)?;
    risk.check()?;
    let states = &result.flow_states;
    let a = &result.anchors;
    let mut entries = Vec::new();
    for j in 0..net.n() {
        let w: Vec<f64> = states.iter().map(|s| s.w[j]).collect();
        entries.push(CvarEntry {
            kind: LimitKind::UpperVoltage,
            index: j,
            cvar: cvar(&w, risk.nu)?,
            limit: net.w_max()[j],
            anchor_objective: cvar_objective(&w, risk.nu, a.w_upper[j])?,
        });
        let neg: Vec<f64> = w.iter().map(|v| -v).collect();
        entries.push(CvarEntry {
            kind: LimitKind::LowerVoltage,
            index: j,
            cvar: cvar(&neg, risk.nu)?,
            limit: -net.w_min()[j],
            anchor_objective: cvar_objective(&neg, risk.nu, a.w_lower[j])?,
        });
    }
    for (e, ln) in net.lines().iter().enumerate() {
        let s2: Vec<f64> = states.iter().map(|s| s.p[e] * s.p[e] + s.q[e] * s.q[e]).collect();
        entries.push(CvarEntry {
            kind: LimitKind::Flow,
            index: e,
            cvar: cvar(&s2, risk.gamma)?,
            limit: ln.s_max * ln.s_max,
            anchor_objective: cvar_objective(&s2, risk.gamma, a.s[e])?,
        });
    }
    Ok(CvarRecheck { entries, tol: CVAR_TOL })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub gap: RelaxationGap,
    pub histogram: ViolationHistogram,
    pub cvar: CvarRecheck,
    pub gap_direction_ok: bool,
    pub relaxation_tight: bool,
    pub chance_bounds_ok: bool,
    pub cvar_ok: bool,
}

impl ValidationReport {
    /// Whether every assertion holds. A loose relaxation is reported but not a failure.
    pub fn passed(&self) -> bool {
        self.gap_direction_ok && self.chance_bounds_ok && self.cvar_ok
    }
}

pub fn validate(result: &HcResult, scen: &ScenarioSet, net: &RadialNetwork) -> Result<ValidationReport> {
    if result.scenario_digest != scen.digest() {
        return Err(Error::ProvenanceMismatch("result was computed for a different scenario set".into()));
    }
    if result.network_digest != net.digest() {
        return Err(Error::ProvenanceMismatch("result was computed for a different network".into()));
    }
    let risk = result.risk();
    let gap = relaxation_gap(result, net);
    let histogram = violation_histogram(result, scen, net)?;
    let cvar = recheck_cvar(result, scen, net, &risk)?;
    Ok(ValidationReport {
        gap_direction_ok: gap.direction_ok(DEFAULT_FEAS_TOL),
        relaxation_tight: gap.is_tight(),
        chance_bounds_ok: histogram.within_bounds(),
        cvar_ok: cvar.passed(),
        gap,
        histogram,
        cvar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{solve_power_flow_oracle, NetworkSpec, OracleOptions};

    fn chain(n: usize) -> RadialNetwork {
        RadialNetwork::new(NetworkSpec {
            buses: n,
            edges: (1..n).map(|i| (i, i + 1, 0.02, 0.03, 5.0)).collect(),
            w_min: vec![0.81; n],
            w_max: vec![1.21; n],
            psi_max: vec![1.0; n - 1],
            eta_g: vec![0.2; n - 1],
            w_substation: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn oracle_states_are_tight() {
        let net = chain(4);
        let st = solve_power_flow_oracle(&net, &[-0.3, 0.2, -0.1], &[-0.1, 0.05, 0.0], &OracleOptions::default()).unwrap();
        let g = relaxation_gap_of(&net, &[st], DEFAULT_EXACTNESS_TOL);
        assert!(g.max_gap.abs() <= 1e-8 && g.min_gap.abs() <= 1e-8);
        assert!(g.is_tight());
    }

    #[test]
    fn zero_flow_has_zero_gap_and_no_violations() {
        let net = chain(3);
        let st = FlowState::zeros(3, 1.0);
        let g = relaxation_gap_of(&net, std::slice::from_ref(&st), DEFAULT_EXACTNESS_TOL);
        assert_eq!(g.max_gap, 0.0);
        let h = histogram_of(&net, &[st], &RiskParams::uniform(0.9).unwrap());
        assert!(h.rows.iter().all(|r| r.fraction == 0.0));
        assert_eq!((h.voltage_limits(), h.flow_limits()), (4, 2));
    }

    #[test]
    fn tracked_limit_counts_scale_with_buses() {
        let net = chain(56);
        let h = histogram_of(&net, &[FlowState::zeros(56, 1.0)], &RiskParams::uniform(0.5).unwrap());
        assert_eq!((h.voltage_limits(), h.flow_limits()), (110, 55));
        let csv = h.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 166);
        assert!(plot_script("v.csv").contains("\"v.csv\""));
    }
}
