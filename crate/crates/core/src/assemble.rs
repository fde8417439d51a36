//! Translation of a network, its scenarios and risk levels into conic programs.
//!
//! Variable order (deterministic, so dumps compare across runs):
//!
//! ```text
//! [psi (n-1), capacity problem only]
//! [w_up (n)] [w_lo (n)] [s (n-1)]                       CVaR anchors
//! for each scenario k:
//!   [P (n-1)] [Q (n-1)] [L (n-1)] [W (n)] [t_up (n)] [t_lo (n)] [t_s (n-1)]
//! ```
//!
//! Per scenario the program holds the real and reactive balance, the voltage
//! drop along each line, the fixed substation voltage, the relaxed loss
//! relation `W_from L >= P^2 + Q^2`, the tail slacks `t_up >= W - w_up`,
//! `t_lo >= -W - w_lo`, the flow hinge `t_s + s >= P^2 + Q^2` and slack
//! nonnegativity. The scenarios are tied together by the CVaR budgets
//!
//! ```text
//! w_up + c_nu sum_k t_up <= W_max,  w_lo + c_nu sum_k t_lo <= -W_min,
//! s + c_gamma sum_k t_s <= S_max^2,  c_delta = 1 / ((1 - delta) K).
//! ```

use serde::{Deserialize, Serialize};

use crate::conic::{soc_rotated, AffineRow, ConicProgram, EqualityRow, RowClass, VarKind, VarLabel};
use crate::error::{Error, Result};
use crate::network::{FlowState, RadialNetwork};
use crate::scenario::ScenarioSet;

/// CVaR levels for voltage (`nu`) and line flow (`gamma`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    pub nu: f64,
    pub gamma: f64,
}

impl RiskParams {
    pub fn new(nu: f64, gamma: f64) -> Result<Self> {
        let r = RiskParams { nu, gamma };
        r.check()?;
        Ok(r)
    }

    /// Same level for voltage and flow.
    pub fn uniform(level: f64) -> Result<Self> {
        Self::new(level, level)
    }

    pub fn check(&self) -> Result<()> {
        for v in [self.nu, self.gamma] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::BadDelta(v));
            }
        }
        Ok(())
    }
}

/// Objective placed on the flow variables of an acceptability program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FlowObjective {
    /// Pure feasibility.
    #[default]
    Zero,
    /// Minimize average resistive losses `sum r L / K`, which selects flows on
    /// the boundary of the relaxation when one exists.
    MinLosses,
}

/// Options for the capacity-maximization program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityModelOptions {
    /// Multiplier on the whole objective.
    pub objective_scale: f64,
    /// Weight of average resistive losses relative to total capacity.
    pub loss_weight: f64,
}

impl Default for CapacityModelOptions {
    fn default() -> Self {
        CapacityModelOptions {
            objective_scale: 1.0,
            loss_weight: 0.0,
        }
    }
}

/// Index arithmetic for the variable order in the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    n: usize,
    k: usize,
    with_psi: bool,
}

impl VarLayout {
    pub fn new(n: usize, scenarios: usize, with_psi: bool) -> Self {
        VarLayout {
            n,
            k: scenarios,
            with_psi,
        }
    }

    fn m(&self) -> usize {
        self.n - 1
    }

    pub fn scenarios(&self) -> usize {
        self.k
    }

    pub fn has_psi(&self) -> bool {
        self.with_psi
    }

    fn globals_start(&self) -> usize {
        if self.with_psi {
            self.m()
        } else {
            0
        }
    }

    pub fn psi(&self, b: usize) -> usize {
        assert!(self.with_psi);
        b
    }

    pub fn w_up(&self, j: usize) -> usize {
        self.globals_start() + j
    }

    pub fn w_lo(&self, j: usize) -> usize {
        self.globals_start() + self.n + j
    }

    pub fn s(&self, e: usize) -> usize {
        self.globals_start() + 2 * self.n + e
    }

    /// Number of variables shared by all scenarios (anchors, and `psi` if present).
    pub fn global_vars(&self) -> usize {
        self.globals_start() + 2 * self.n + self.m()
    }

    /// Variables introduced by each scenario, `7n - 4`.
    pub fn per_scenario_vars(&self) -> usize {
        7 * self.n - 4
    }

    pub fn total_vars(&self) -> usize {
        self.global_vars() + self.k * self.per_scenario_vars()
    }

    fn base(&self, k: usize) -> usize {
        self.global_vars() + k * self.per_scenario_vars()
    }

    pub fn p(&self, k: usize, e: usize) -> usize {
        self.base(k) + e
    }

    pub fn q(&self, k: usize, e: usize) -> usize {
        self.base(k) + self.m() + e
    }

    pub fn l(&self, k: usize, e: usize) -> usize {
        self.base(k) + 2 * self.m() + e
    }

    pub fn w(&self, k: usize, j: usize) -> usize {
        self.base(k) + 3 * self.m() + j
    }

    pub fn t_up(&self, k: usize, j: usize) -> usize {
        self.base(k) + 3 * self.m() + self.n + j
    }

    pub fn t_lo(&self, k: usize, j: usize) -> usize {
        self.base(k) + 3 * self.m() + 2 * self.n + j
    }

    pub fn t_s(&self, k: usize, e: usize) -> usize {
        self.base(k) + 3 * self.m() + 3 * self.n + e
    }

    /// Labels in index order.
    pub fn labels(&self) -> Vec<VarLabel> {
        let g = |kind, index| VarLabel {
            kind,
            scenario: None,
            index,
        };
        let mut out = Vec::with_capacity(self.total_vars());
        if self.with_psi {
            out.extend((0..self.m()).map(|b| g(VarKind::Psi, b)));
        }
        out.extend((0..self.n).map(|j| g(VarKind::UpperAnchor, j)));
        out.extend((0..self.n).map(|j| g(VarKind::LowerAnchor, j)));
        out.extend((0..self.m()).map(|e| g(VarKind::FlowAnchor, e)));
        for k in 0..self.k {
            let s = |kind, index| VarLabel {
                kind,
                scenario: Some(k),
                index,
            };
            out.extend((0..self.m()).map(|e| s(VarKind::P, e)));
            out.extend((0..self.m()).map(|e| s(VarKind::Q, e)));
            out.extend((0..self.m()).map(|e| s(VarKind::L, e)));
            out.extend((0..self.n).map(|j| s(VarKind::W, j)));
            out.extend((0..self.n).map(|j| s(VarKind::UpperSlack, j)));
            out.extend((0..self.n).map(|j| s(VarKind::LowerSlack, j)));
            out.extend((0..self.m()).map(|e| s(VarKind::FlowSlack, e)));
        }
        out
    }

    pub fn flow_state(&self, x: &[f64], k: usize) -> FlowState {
        let m = self.m();
        FlowState {
            p: (0..m).map(|e| x[self.p(k, e)]).collect(),
            q: (0..m).map(|e| x[self.q(k, e)]).collect(),
            l: (0..m).map(|e| x[self.l(k, e)]).collect(),
            w: (0..self.n).map(|j| x[self.w(k, j)]).collect(),
        }
    }

    pub fn flow_states(&self, x: &[f64]) -> Vec<FlowState> {
        (0..self.k).map(|k| self.flow_state(x, k)).collect()
    }

    pub fn anchors(&self, x: &[f64]) -> CvarAnchors {
        CvarAnchors {
            w_upper: (0..self.n).map(|j| x[self.w_up(j)]).collect(),
            w_lower: (0..self.n).map(|j| x[self.w_lo(j)]).collect(),
            s: (0..self.m()).map(|e| x[self.s(e)]).collect(),
        }
    }

    pub fn psi_values(&self, x: &[f64]) -> Vec<f64> {
        (0..self.m()).map(|b| x[self.psi(b)]).collect()
    }
}

/// Values of the CVaR anchor variables at a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvarAnchors {
    pub w_upper: Vec<f64>,
    pub w_lower: Vec<f64>,
    pub s: Vec<f64>,
}

/// Program size, per scenario and overall.
///
/// `per_scenario_constraints` counts each flow hinge (its cone and `t_s >= 0`)
/// as one constraint and the substation voltage as a variable fixing, which
/// gives `9n - 5`. The raw row counts are reported alongside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeReport {
    pub buses: usize,
    pub scenarios: usize,
    pub per_scenario_vars: usize,
    pub per_scenario_constraints: usize,
    pub per_scenario_equalities: usize,
    pub per_scenario_inequalities: usize,
    pub per_scenario_cones: usize,
    pub global_vars: usize,
    pub global_constraints: usize,
    pub total_vars: usize,
}

fn is_per_scenario(class: RowClass) -> bool {
    !matches!(
        class,
        RowClass::CapacityUpper
            | RowClass::CapacityLower
            | RowClass::UpperVoltageCvar
            | RowClass::LowerVoltageCvar
            | RowClass::FlowCvar
            | RowClass::Generic
    )
}

/// Count the rows and variables of an assembled program.
pub fn size_report(prog: &ConicProgram, buses: usize, scenarios: usize) -> SizeReport {
    let k = scenarios.max(1);
    let count = |classes: &mut dyn Iterator<Item = RowClass>| {
        let (mut per, mut global, mut hinge_pairs, mut fixings) = (0usize, 0usize, 0usize, 0usize);
        for c in classes {
            if is_per_scenario(c) {
                per += 1;
                if c == RowClass::FlowSlackNonneg {
                    hinge_pairs += 1;
                }
                if c == RowClass::SubstationVoltage {
                    fixings += 1;
                }
            } else {
                global += 1;
            }
        }
        (per, global, hinge_pairs, fixings)
    };
    let (eq_per, eq_glob, _, fix) = count(&mut prog.equalities.iter().map(|r| r.class));
    let (in_per, in_glob, pairs, _) = count(&mut prog.inequalities.iter().map(|r| r.class));
    let (soc_per, soc_glob, _, _) = count(&mut prog.cones.iter().map(|r| r.class));
    let per_vars = prog.labels.iter().filter(|l| l.scenario.is_some()).count();
    SizeReport {
        buses,
        scenarios,
        per_scenario_vars: per_vars / k,
        per_scenario_constraints: (eq_per + in_per + soc_per - pairs - fix) / k,
        per_scenario_equalities: eq_per / k,
        per_scenario_inequalities: in_per / k,
        per_scenario_cones: soc_per / k,
        global_vars: prog.num_vars() - per_vars,
        global_constraints: eq_glob + in_glob + soc_glob,
        total_vars: prog.num_vars(),
    }
}

fn check_dims(net: &RadialNetwork, scen: &ScenarioSet) -> Result<()> {
    if scen.width() != net.num_lines() {
        return Err(Error::dims(format!(
            "scenarios cover {} buses, network has {} non-substation buses",
            scen.width(),
            net.num_lines()
        )));
    }
    Ok(())
}

/// Capacity maximization with default options.
pub fn build_hc_max(net: &RadialNetwork, scen: &ScenarioSet, risk: &RiskParams) -> Result<ConicProgram> {
    build_hc_max_with(net, scen, risk, &CapacityModelOptions::default())
}

/// Capacity maximization: `max 1^T psi` stored as `min -1^T psi`.
pub fn build_hc_max_with(
    net: &RadialNetwork,
    scen: &ScenarioSet,
    risk: &RiskParams,
    opts: &CapacityModelOptions,
) -> Result<ConicProgram> {
    check_dims(net, scen)?;
    risk.check()?;
    let layout = VarLayout::new(net.n(), scen.len(), true);
    let mut prog = skeleton(&layout);
    let m = net.num_lines();
    for b in 0..m {
        prog.objective[layout.psi(b)] = -opts.objective_scale;
    }
    add_loss_objective(&mut prog, &layout, net, opts.objective_scale * opts.loss_weight);
    for b in 0..m {
        prog.add_inequality(vec![(layout.psi(b), 1.0)], net.psi_max()[b], RowClass::CapacityUpper);
        prog.add_inequality(vec![(layout.psi(b), -1.0)], 0.0, RowClass::CapacityLower);
    }
    add_constraints(&mut prog, &layout, net, scen, risk, None);
    Ok(prog)
}

/// Acceptability of a fixed `psi` with a zero objective.
pub fn build_acceptability(
    net: &RadialNetwork,
    scen: &ScenarioSet,
    risk: &RiskParams,
    psi: &[f64],
) -> Result<ConicProgram> {
    build_acceptability_with(net, scen, risk, psi, FlowObjective::Zero)
}

/// Acceptability of a fixed `psi`; `psi` enters only the balance right-hand
/// sides, through tagged coefficients.
pub fn build_acceptability_with(
    net: &RadialNetwork,
    scen: &ScenarioSet,
    risk: &RiskParams,
    psi: &[f64],
    objective: FlowObjective,
) -> Result<ConicProgram> {
    check_dims(net, scen)?;
    risk.check()?;
    if psi.len() != net.num_lines() {
        return Err(Error::dims(format!(
            "psi has length {}, expected {}",
            psi.len(),
            net.num_lines()
        )));
    }
    if psi.iter().zip(net.psi_max()).any(|(p, hi)| *p < 0.0 || p > hi) {
        log::warn!("candidate capacity lies outside the box [0, psi_max]");
    }
    let layout = VarLayout::new(net.n(), scen.len(), false);
    let mut prog = skeleton(&layout);
    prog.psi = psi.to_vec();
    if objective == FlowObjective::MinLosses {
        add_loss_objective(&mut prog, &layout, net, 1.0);
    }
    add_constraints(&mut prog, &layout, net, scen, risk, Some(()));
    Ok(prog)
}

/// Layout of a program built by this module for `net` and `scenarios`.
pub fn layout_for(prog: &ConicProgram, net: &RadialNetwork, scenarios: usize) -> VarLayout {
    let with_psi = prog.labels.first().is_some_and(|l| l.kind == VarKind::Psi);
    VarLayout::new(net.n(), scenarios, with_psi)
}

fn skeleton(layout: &VarLayout) -> ConicProgram {
    let labels = layout.labels();
    ConicProgram {
        objective: vec![0.0; labels.len()],
        labels,
        ..ConicProgram::default()
    }
}

fn add_loss_objective(prog: &mut ConicProgram, layout: &VarLayout, net: &RadialNetwork, weight: f64) {
    if weight == 0.0 {
        return;
    }
    let k = layout.scenarios() as f64;
    for sc in 0..layout.scenarios() {
        for (e, line) in net.lines().iter().enumerate() {
            prog.objective[layout.l(sc, e)] += weight * line.r / k;
        }
    }
}

fn add_constraints(
    prog: &mut ConicProgram,
    layout: &VarLayout,
    net: &RadialNetwork,
    scen: &ScenarioSet,
    risk: &RiskParams,
    fixed_psi: Option<()>,
) {
    let n = net.n();
    let m = net.num_lines();
    let kk = scen.len();
    let lines = net.lines();
    let eta = net.eta_g();

    for k in 0..kk {
        let alpha = scen.alpha(k);
        let (p_d, q_d) = (scen.p_d(k), scen.q_d(k));

        // Balance at each non-substation bus b (reduced index b - 1):
        // sum_{children} F - (F_parent - z_parent L_parent) - g(psi) = -demand
        for (reactive, class) in [(false, RowClass::RealBalance), (true, RowClass::ReactiveBalance)] {
            for bus in 1..n {
                let var = |e| if reactive { layout.q(k, e) } else { layout.p(k, e) };
                let mut coeffs = Vec::new();
                for &c in net.child_lines(bus) {
                    coeffs.push((var(c), 1.0));
                }
                let pe = net.parent_line(bus).expect("non-substation bus has a parent line");
                let z = if reactive { lines[pe].x } else { lines[pe].r };
                coeffs.push((var(pe), -1.0));
                coeffs.push((layout.l(k, pe), z));
                let b = bus - 1;
                let gen = alpha[b] * if reactive { eta[b] } else { 1.0 };
                let demand = if reactive { q_d[b] } else { p_d[b] };
                let mut row = EqualityRow {
                    coeffs,
                    rhs: -demand,
                    psi_coeffs: Vec::new(),
                    class,
                };
                if fixed_psi.is_some() {
                    row.psi_coeffs.push((b, gen));
                } else {
                    row.coeffs.push((layout.psi(b), -gen));
                }
                prog.equalities.push(row);
            }
        }

        for (e, ln) in lines.iter().enumerate() {
            prog.add_equality(
                vec![
                    (layout.w(k, ln.from), 1.0),
                    (layout.w(k, ln.to), -1.0),
                    (layout.p(k, e), -2.0 * ln.r),
                    (layout.q(k, e), -2.0 * ln.x),
                    (layout.l(k, e), ln.z2()),
                ],
                0.0,
                RowClass::VoltageDrop,
            );
        }
        prog.add_equality(vec![(layout.w(k, 0), 1.0)], net.w_substation(), RowClass::SubstationVoltage);

        for (e, ln) in lines.iter().enumerate() {
            let block = soc_rotated(
                &AffineRow::var(layout.w(k, ln.from)),
                &AffineRow::var(layout.l(k, e)),
                &AffineRow::var(layout.p(k, e)),
                &AffineRow::var(layout.q(k, e)),
            );
            prog.add_cone(block, RowClass::LossRelaxation);
        }

        for j in 0..n {
            prog.add_inequality(
                vec![(layout.w(k, j), 1.0), (layout.w_up(j), -1.0), (layout.t_up(k, j), -1.0)],
                0.0,
                RowClass::UpperVoltageTail,
            );
        }
        for j in 0..n {
            prog.add_inequality(
                vec![(layout.w(k, j), -1.0), (layout.w_lo(j), -1.0), (layout.t_lo(k, j), -1.0)],
                0.0,
                RowClass::LowerVoltageTail,
            );
        }
        for j in 0..n {
            prog.add_inequality(vec![(layout.t_up(k, j), -1.0)], 0.0, RowClass::SlackNonneg);
        }
        for j in 0..n {
            prog.add_inequality(vec![(layout.t_lo(k, j), -1.0)], 0.0, RowClass::SlackNonneg);
        }

        for e in 0..m {
            let z1 = AffineRow::new(vec![(layout.t_s(k, e), 1.0), (layout.s(e), 1.0)], 0.0);
            let block = soc_rotated(
                &z1,
                &AffineRow::constant(1.0),
                &AffineRow::var(layout.p(k, e)),
                &AffineRow::var(layout.q(k, e)),
            );
            prog.add_cone(block, RowClass::FlowHinge);
            prog.add_inequality(vec![(layout.t_s(k, e), -1.0)], 0.0, RowClass::FlowSlackNonneg);
        }
    }

    let c_nu = 1.0 / ((1.0 - risk.nu) * kk as f64);
    let c_gamma = 1.0 / ((1.0 - risk.gamma) * kk as f64);
    for j in 0..n {
        let mut coeffs = vec![(layout.w_up(j), 1.0)];
        coeffs.extend((0..kk).map(|k| (layout.t_up(k, j), c_nu)));
        prog.add_inequality(coeffs, net.w_max()[j], RowClass::UpperVoltageCvar);
    }
    for j in 0..n {
        let mut coeffs = vec![(layout.w_lo(j), 1.0)];
        coeffs.extend((0..kk).map(|k| (layout.t_lo(k, j), c_nu)));
        prog.add_inequality(coeffs, -net.w_min()[j], RowClass::LowerVoltageCvar);
    }
    for (e, ln) in lines.iter().enumerate() {
        let mut coeffs = vec![(layout.s(e), 1.0)];
        coeffs.extend((0..kk).map(|k| (layout.t_s(k, e), c_gamma)));
        prog.add_inequality(coeffs, ln.s_max * ln.s_max, RowClass::FlowCvar);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{solve, SolveStatus, SolverOptions};
    use crate::network::NetworkSpec;

    fn three_bus() -> RadialNetwork {
        RadialNetwork::new(NetworkSpec {
            buses: 3,
            edges: vec![(1, 2, 0.02, 0.04, 3.0), (2, 3, 0.03, 0.03, 3.0)],
            w_min: vec![0.9025; 3],
            w_max: vec![1.1025; 3],
            psi_max: vec![4.0, 4.0],
            eta_g: vec![0.251, 0.251],
            w_substation: 1.0,
        })
        .unwrap()
    }

    fn one_scenario(alpha: f64, p: f64, q: f64) -> ScenarioSet {
        ScenarioSet::from_rows(&[(vec![alpha; 2], vec![p; 2], vec![q; 2])]).unwrap()
    }

    #[test]
    fn per_scenario_counts() {
        let net = three_bus();
        let prog = build_hc_max(&net, &one_scenario(0.5, 0.3, 0.1), &RiskParams::uniform(0.8).unwrap()).unwrap();
        let rep = size_report(&prog, 3, 1);
        assert_eq!(rep.per_scenario_vars, 17);
        assert_eq!(rep.per_scenario_constraints, 22);
        assert_eq!(rep.global_vars, 2 + 3 + 3 + 2);
        prog.check().unwrap();

        let scen: Vec<_> = (0..4).map(|i| (vec![0.1 * i as f64; 2], vec![0.2; 2], vec![0.1; 2])).collect();
        let prog = build_hc_max(&net, &ScenarioSet::from_rows(&scen).unwrap(), &RiskParams::uniform(0.5).unwrap()).unwrap();
        let rep = size_report(&prog, 3, 4);
        assert_eq!((rep.per_scenario_vars, rep.per_scenario_constraints), (17, 22));
        assert_eq!(rep.total_vars, 10 + 4 * 17);
    }

    #[test]
    fn no_sun_saturates_the_box() {
        let net = three_bus();
        let prog = build_hc_max(&net, &one_scenario(0.0, 0.0, 0.0), &RiskParams::uniform(0.5).unwrap()).unwrap();
        let out = solve(&prog, &SolverOptions::default());
        assert_eq!(out.status, SolveStatus::Optimal);
        let x = out.x.unwrap();
        let layout = layout_for(&prog, &net, 1);
        let psi = layout.psi_values(&x);
        assert!((psi[0] - 4.0).abs() < 1e-6 && (psi[1] - 4.0).abs() < 1e-6, "{psi:?}");
    }

    #[test]
    fn psi_enters_only_tagged_equalities() {
        let net = three_bus();
        let scen = one_scenario(0.8, 0.3, 0.1);
        let risk = RiskParams::uniform(0.5).unwrap();
        let prog = build_acceptability(&net, &scen, &risk, &[1.0, 2.0]).unwrap();
        let tagged: Vec<_> = prog.equalities.iter().filter(|r| !r.psi_coeffs.is_empty()).collect();
        assert_eq!(tagged.len(), 4);
        assert!(tagged
            .iter()
            .all(|r| matches!(r.class, RowClass::RealBalance | RowClass::ReactiveBalance)));
        assert!(prog.objective.iter().all(|c| *c == 0.0));
        // rhs at psi: -p_d + alpha psi
        assert!((prog.equality_rhs(0) - (-0.3 + 0.8)).abs() < 1e-15);
        assert!((prog.equality_rhs(1) - (-0.3 + 1.6)).abs() < 1e-15);
    }

    #[test]
    fn fixed_psi_agrees_with_pinned_capacity_program() {
        let net = three_bus();
        let scen = one_scenario(0.9, 0.2, 0.05);
        let risk = RiskParams::uniform(0.5).unwrap();
        for psi in [[0.5, 0.5], [3.5, 3.9]] {
            let acc = solve(&build_acceptability(&net, &scen, &risk, &psi).unwrap(), &SolverOptions::default());
            let mut pinned = build_hc_max(&net, &scen, &risk).unwrap();
            for (b, v) in psi.iter().enumerate() {
                pinned.add_equality(vec![(b, 1.0)], *v, RowClass::Generic);
            }
            let pin = solve(&pinned, &SolverOptions::default());
            let feasible = |s: SolveStatus| s == SolveStatus::Optimal;
            assert_eq!(feasible(acc.status), feasible(pin.status), "psi {psi:?}: {:?} vs {:?}", acc.status, pin.status);
        }
    }

    #[test]
    fn layout_is_a_bijection() {
        let layout = VarLayout::new(4, 3, true);
        let labels = layout.labels();
        assert_eq!(labels.len(), layout.total_vars());
        let mut seen = std::collections::HashSet::new();
        for k in 0..3 {
            for e in 0..3 {
                for idx in [layout.p(k, e), layout.q(k, e), layout.l(k, e), layout.t_s(k, e)] {
                    assert!(seen.insert(idx));
                }
            }
            for j in 0..4 {
                for idx in [layout.w(k, j), layout.t_up(k, j), layout.t_lo(k, j)] {
                    assert!(seen.insert(idx));
                }
            }
        }
        for j in 0..4 {
            assert!(seen.insert(layout.w_up(j)));
            assert!(seen.insert(layout.w_lo(j)));
        }
        for e in 0..3 {
            assert!(seen.insert(layout.s(e)));
            assert!(seen.insert(layout.psi(e)));
        }
        assert_eq!(seen.len(), layout.total_vars());
        assert_eq!(labels[layout.w(2, 1)].kind, VarKind::W);
        assert_eq!(labels[layout.w(2, 1)].scenario, Some(2));
    }
}
