//! Hosting-capacity maximization over a scenario sample.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assemble::{
    build_acceptability, build_hc_max_with, layout_for, CapacityModelOptions, CvarAnchors, RiskParams,
};
use crate::conic::{solve, SolveOutcome, SolveStatus, SolverOptions};
use crate::cvar::{cvar, violation_fraction};
use crate::error::{Error, Result};
use crate::network::{FlowState, RadialNetwork};
use crate::rng::SeededRng;
use crate::scenario::ScenarioSet;

/// Residual tolerance for the post-hoc checks of a returned solution.
pub const POST_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximizeOptions {
    /// Multiplier on the objective handed to the solver; the reported
    /// objective is always recomputed from `psi_star`.
    pub objective_scale: f64,
    /// Weight of average resistive losses, off by default.
    pub loss_weight: f64,
    pub solver: SolverOptions,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions {
            objective_scale: 1.0,
            loss_weight: 0.0,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

impl SolverStats {
    pub fn from_outcome(out: &SolveOutcome) -> Self {
        SolverStats {
            status: out.status,
            iterations: out.iterations,
            primal_residual: out.primal_residual,
            dual_residual: out.dual_residual,
            gap: out.gap,
        }
    }
}

/// Empirical violation frequencies: per non-substation bus for the voltage
/// limits, per line for the flow limit. Violations are strict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationFractions {
    pub upper_voltage: Vec<f64>,
    pub lower_voltage: Vec<f64>,
    pub flow: Vec<f64>,
}

impl ViolationFractions {
    pub fn compute(net: &RadialNetwork, states: &[FlowState]) -> Self {
        let n = net.n();
        let column = |j: usize| states.iter().map(|s| s.w[j]).collect::<Vec<_>>();
        let mut upper = Vec::with_capacity(n - 1);
        let mut lower = Vec::with_capacity(n - 1);
        for j in 1..n {
            let w = column(j);
            upper.push(violation_fraction(&w, net.w_max()[j]));
            let neg: Vec<f64> = w.iter().map(|v| -v).collect();
            lower.push(violation_fraction(&neg, -net.w_min()[j]));
        }
        let flow = net
            .lines()
            .iter()
            .enumerate()
            .map(|(e, ln)| {
                let s2: Vec<f64> = states.iter().map(|s| s.p[e] * s.p[e] + s.q[e] * s.q[e]).collect();
                violation_fraction(&s2, ln.s_max * ln.s_max)
            })
            .collect();
        ViolationFractions {
            upper_voltage: upper,
            lower_voltage: lower,
            flow,
        }
    }

    /// Largest voltage fraction and largest flow fraction.
    pub fn max_voltage(&self) -> f64 {
        self.upper_voltage.iter().chain(&self.lower_voltage).fold(0.0, |a, b| a.max(*b))
    }

    pub fn max_flow(&self) -> f64 {
        self.flow.iter().fold(0.0, |a, b| a.max(*b))
    }

    /// Whether the fractions respect the chance bounds implied by CVaR.
    pub fn within_chance_bounds(&self, risk: &RiskParams) -> bool {
        self.max_voltage() <= 1.0 - risk.nu && self.max_flow() <= 1.0 - risk.gamma
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HcResult {
    pub psi_star: Vec<f64>,
    pub objective: f64,
    pub flow_states: Vec<FlowState>,
    pub anchors: CvarAnchors,
    pub solver: SolverStats,
    pub nu: f64,
    pub gamma: f64,
    #[serde(rename = "K")]
    pub scenarios: usize,
    pub scenario_digest: String,
    pub network_digest: String,
    pub violations: ViolationFractions,
}

impl HcResult {
    pub fn risk(&self) -> RiskParams {
        RiskParams {
            nu: self.nu,
            gamma: self.gamma,
        }
    }
}

/// Solve the acceptability program at `psi = 0` and fail with
/// [`Error::BaseInfeasible`] if even the solar-free network breaks the limits.
pub fn check_base_feasible(
    net: &RadialNetwork,
    scen: &ScenarioSet,
    risk: &RiskParams,
    opts: &SolverOptions,
) -> Result<()> {
    let prog = build_acceptability(net, scen, risk, &vec![0.0; net.num_lines()])?;
    let out = solve(&prog, opts);
    match out.status {
        SolveStatus::Optimal => Ok(()),
        SolveStatus::Infeasible | SolveStatus::InfeasibleNoCertificate => Err(Error::BaseInfeasible),
        _ => Err(Error::NumericalFailure(format!(
            "base feasibility check: {}",
            out.message
        ))),
    }
}

pub fn maximize_capacity(
    net: &RadialNetwork,
    scen: &ScenarioSet,
    risk: &RiskParams,
    opts: &MaximizeOptions,
) -> Result<HcResult> {
    risk.check()?;
    if scen.is_empty() {
        return Err(Error::EmptyFile);
    }
    check_base_feasible(net, scen, risk, &opts.solver)?;
    let model = CapacityModelOptions {
        objective_scale: opts.objective_scale,
        loss_weight: opts.loss_weight,
    };
    let prog = build_hc_max_with(net, scen, risk, &model)?;
    let out = solve(&prog, &opts.solver);
    if out.status != SolveStatus::Optimal {
        return Err(Error::NumericalFailure(format!(
            "capacity program ended with {:?}: {}",
            out.status, out.message
        )));
    }
    let x = out.x.as_ref().expect("optimal outcome carries a point");
    let layout = layout_for(&prog, net, scen.len());
    let psi_star: Vec<f64> = layout
        .psi_values(x)
        .iter()
        .zip(net.psi_max())
        .map(|(v, hi)| v.clamp(0.0, *hi))
        .collect();
    let flow_states = layout.flow_states(x);
    verify_solution(net, scen, risk, &psi_star, &flow_states)?;
    let violations = ViolationFractions::compute(net, &flow_states);
    Ok(HcResult {
        objective: psi_star.iter().sum(),
        psi_star,
        anchors: layout.anchors(x),
        flow_states,
        solver: SolverStats::from_outcome(&out),
        nu: risk.nu,
        gamma: risk.gamma,
        scenarios: scen.len(),
        scenario_digest: scen.digest(),
        network_digest: net.digest(),
        violations,
    })
}

/// Re-check a solution against the model it came from, without the epigraph
/// variables: branch-flow equalities, relaxation direction and closed-form CVaR.
fn verify_solution(
    net: &RadialNetwork,
    scen: &ScenarioSet,
    risk: &RiskParams,
    psi: &[f64],
    states: &[FlowState],
) -> Result<()> {
    let fail = |what: String| Err(Error::NumericalFailure(format!("post-solve check: {what}")));
    for (k, st) in states.iter().enumerate() {
        let (p, q) = net.injections(scen.alpha(k), scen.p_d(k), scen.q_d(k), psi)?;
        let [rp, rq, rw, _] = net.flow_residuals(&p, &q, st);
        let scale = 1.0 + psi.iter().fold(0.0_f64, |a, b| a.max(*b));
        if rp.max(rq).max(rw) > POST_CHECK_TOL * scale {
            return fail(format!("scenario {k} branch-flow residual {:.3e}", rp.max(rq).max(rw)));
        }
        for (e, ln) in net.lines().iter().enumerate() {
            let gap = st.w[ln.from] * st.l[e] - st.p[e] * st.p[e] - st.q[e] * st.q[e];
            if gap < -POST_CHECK_TOL * scale * scale {
                return fail(format!("scenario {k} line {e} relaxation gap {gap:.3e}"));
            }
        }
    }
    for j in 0..net.n() {
        let w: Vec<f64> = states.iter().map(|s| s.w[j]).collect();
        if cvar(&w, risk.nu)? > net.w_max()[j] + POST_CHECK_TOL {
            return fail(format!("upper voltage CVaR at bus {}", j + 1));
        }
        let neg: Vec<f64> = w.iter().map(|v| -v).collect();
        if cvar(&neg, risk.nu)? > -net.w_min()[j] + POST_CHECK_TOL {
            return fail(format!("lower voltage CVaR at bus {}", j + 1));
        }
    }
    for (e, ln) in net.lines().iter().enumerate() {
        let s2: Vec<f64> = states.iter().map(|s| s.p[e] * s.p[e] + s.q[e] * s.q[e]).collect();
        let limit = ln.s_max * ln.s_max;
        if cvar(&s2, risk.gamma)? > limit + POST_CHECK_TOL * (1.0 + limit) {
            return fail(format!("flow CVaR on line {e}"));
        }
    }
    Ok(())
}

/// One row of a subsampling study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleRow {
    pub size: usize,
    pub trials: usize,
    /// Trials that produced an optimum.
    pub solved: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 when it is undefined.
    pub std: f64,
    pub std_defined: bool,
    pub objectives: Vec<f64>,
    pub errors: Vec<String>,
}

/// Repeat the maximization on `trials` random subsamples of each size.
/// Trial seeds are drawn from one generator seeded with `seed`, so the table
/// depends only on the inputs. Failed trials are recorded, not fatal.
pub fn subsample_study(
    net: &RadialNetwork,
    scen: &ScenarioSet,
    risk: &RiskParams,
    sizes: &[usize],
    trials: usize,
    seed: u64,
    opts: &MaximizeOptions,
) -> Result<Vec<SubsampleRow>> {
    risk.check()?;
    if let Some(&bad) = sizes.iter().find(|&&s| s > scen.len() || s == 0) {
        return Err(Error::BadCount {
            requested: bad,
            available: scen.len(),
        });
    }
    let mut rng = SeededRng::new(seed);
    let plan: Vec<(usize, Vec<u64>)> = sizes
        .iter()
        .map(|&s| (s, (0..trials).map(|_| rng.next_u64()).collect()))
        .collect();

    plan.into_iter()
        .map(|(size, seeds)| {
            let runs: Vec<std::result::Result<f64, String>> = if size == scen.len() {
                // every subsample is the full set
                let r = maximize_capacity(net, scen, risk, opts).map(|h| h.objective).map_err(|e| e.to_string());
                vec![r; trials]
            } else {
                seeds
                    .par_iter()
                    .map(|&s| {
                        scen.subsample(size, s)
                            .and_then(|sub| maximize_capacity(net, &sub, risk, opts))
                            .map(|h| h.objective)
                            .map_err(|e| e.to_string())
                    })
                    .collect()
            };
            let objectives: Vec<f64> = runs.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
            let errors: Vec<String> = runs.iter().filter_map(|r| r.as_ref().err().cloned()).collect();
            let (mean, std, std_defined) = mean_std(&objectives);
            Ok(SubsampleRow {
                size,
                trials,
                solved: objectives.len(),
                mean,
                std,
                std_defined,
                objectives,
                errors,
            })
        })
        .collect()
}

fn mean_std(v: &[f64]) -> (f64, f64, bool) {
    if v.is_empty() {
        return (f64::NAN, 0.0, false);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0, false);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt(), true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemble::build_acceptability;
    use crate::network::NetworkSpec;

    fn two_bus(w_max: f64) -> RadialNetwork {
        RadialNetwork::new(NetworkSpec {
            buses: 2,
            edges: vec![(1, 2, 0.05, 0.05, 10.0)],
            w_min: vec![0.81; 2],
            w_max: vec![w_max; 2],
            psi_max: vec![10.0],
            eta_g: vec![0.0],
            w_substation: 1.0,
        })
        .unwrap()
    }

    fn feasible_at(net: &RadialNetwork, scen: &ScenarioSet, risk: &RiskParams, psi: f64) -> bool {
        let prog = build_acceptability(net, scen, risk, &[psi]).unwrap();
        solve(&prog, &SolverOptions::default()).status == SolveStatus::Optimal
    }

    #[test]
    fn two_bus_capacity_matches_bisection() {
        let net = two_bus(1.1025);
        let scen = ScenarioSet::from_rows(&[(vec![1.0], vec![0.0], vec![0.0])]).unwrap();
        let risk = RiskParams::uniform(0.5).unwrap();
        let res = maximize_capacity(&net, &scen, &risk, &MaximizeOptions::default()).unwrap();

        let (mut lo, mut hi) = (0.0, 10.0);
        assert!(feasible_at(&net, &scen, &risk, lo));
        if feasible_at(&net, &scen, &risk, hi) {
            lo = hi;
        } else {
            while hi - lo > 1e-7 {
                let mid = 0.5 * (lo + hi);
                if feasible_at(&net, &scen, &risk, mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        assert!((res.psi_star[0] - lo).abs() < 1e-5, "{} vs {}", res.psi_star[0], lo);
        assert!(res.psi_star[0] < 10.0, "limit should bind inside the box");
        assert!((res.objective - res.psi_star[0]).abs() < 1e-12);
    }

    #[test]
    fn base_infeasible_is_reported() {
        // demand too large for the lower voltage limit even without solar
        let net = two_bus(1.1025);
        let scen = ScenarioSet::from_rows(&[(vec![0.0], vec![20.0], vec![0.0])]).unwrap();
        let err = maximize_capacity(&net, &scen, &RiskParams::uniform(0.5).unwrap(), &MaximizeOptions::default());
        assert!(matches!(err, Err(Error::BaseInfeasible)), "{err:?}");
    }

    #[test]
    fn full_size_has_zero_spread() {
        let net = two_bus(1.1025);
        let rows: Vec<_> = (0..6).map(|k| (vec![0.2 * k as f64], vec![0.1], vec![0.0])).collect();
        let scen = ScenarioSet::from_rows(&rows).unwrap();
        let risk = RiskParams::uniform(0.5).unwrap();
        let t = subsample_study(&net, &scen, &risk, &[6, 3], 3, 7, &MaximizeOptions::default()).unwrap();
        assert_eq!(t[0].std, 0.0);
        assert!(t[0].std_defined);
        assert_eq!(t[1].solved, 3);
        let single = subsample_study(&net, &scen, &risk, &[3], 1, 7, &MaximizeOptions::default()).unwrap();
        assert!(!single[0].std_defined && single[0].std == 0.0);
        assert!(subsample_study(&net, &scen, &risk, &[7], 1, 7, &MaximizeOptions::default()).is_err());
    }

    #[test]
    fn violation_fractions_count_strictly() {
        let net = two_bus(1.1025);
        let mk = |w2: f64| FlowState {
            p: vec![0.0],
            q: vec![0.0],
            l: vec![0.0],
            w: vec![1.0, w2],
        };
        let states = vec![mk(1.1025), mk(1.2), mk(1.0), mk(0.8)];
        let v = ViolationFractions::compute(&net, &states);
        assert_eq!(v.upper_voltage, vec![0.25]);
        assert_eq!(v.lower_voltage, vec![0.25]);
        assert_eq!(v.flow, vec![0.0]);
    }
}
