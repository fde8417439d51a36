//! Exact (nonconvex) branch-flow solve by backward/forward sweep.

use super::{FlowState, RadialNetwork};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub max_iter: usize,
    /// Stop once the largest change in `L` falls below `tol * (1 + max L)`.
    pub tol: f64,
    /// Required residual of every branch-flow relation on return.
    pub residual_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            max_iter: 1000,
            tol: 1e-14,
            residual_tol: 1e-8,
        }
    }
}

const DIVERGENCE_LIMIT: f64 = 1e12;

/// Solve the exact branch-flow equations for net injections `p_inj`, `q_inj`
/// (one entry per non-substation bus).
///
/// Starts from zero currents, so the iteration settles on the high-voltage
/// solution when one exists.
pub fn solve_power_flow_oracle(
    net: &RadialNetwork,
    p_inj: &[f64],
    q_inj: &[f64],
    opts: &OracleOptions,
) -> Result<FlowState> {
    let m = net.num_lines();
    if p_inj.len() != m || q_inj.len() != m {
        return Err(Error::dims(format!(
            "injections have lengths {}/{}, expected {m}",
            p_inj.len(),
            q_inj.len()
        )));
    }
    let mut state = FlowState::zeros(net.n(), net.w_substation());
    let mut last_change = f64::INFINITY;
    for _ in 0..opts.max_iter {
        sweep(net, p_inj, q_inj, &mut state)?;
        let mut change = 0.0_f64;
        let mut l_max = 0.0_f64;
        for (e, line) in net.lines().iter().enumerate() {
            let w_from = state.w[line.from];
            let l_new = (state.p[e] * state.p[e] + state.q[e] * state.q[e]) / w_from;
            if !l_new.is_finite() || l_new > DIVERGENCE_LIMIT {
                return Err(Error::NoSolution(format!(
                    "squared current on line {} diverges",
                    e + 1
                )));
            }
            change = change.max((l_new - state.l[e]).abs());
            l_max = l_max.max(l_new);
            state.l[e] = l_new;
        }
        last_change = change;
        if change <= opts.tol * (1.0 + l_max) {
            sweep(net, p_inj, q_inj, &mut state)?;
            let worst = net
                .flow_residuals(p_inj, q_inj, &state)
                .into_iter()
                .fold(0.0_f64, f64::max);
            if worst <= opts.residual_tol {
                return Ok(state);
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        last_change,
    })
}

/// Flows from the leaves up with `L` held fixed, then voltages from the root down.
fn sweep(net: &RadialNetwork, p_inj: &[f64], q_inj: &[f64], s: &mut FlowState) -> Result<()> {
    let lines = net.lines();
    for &bus in net.bfs_order().iter().rev() {
        let Some(e) = net.parent_line(bus) else {
            continue;
        };
        let (mut p, mut q) = (-p_inj[bus - 1], -q_inj[bus - 1]);
        for &c in net.child_lines(bus) {
            p += s.p[c];
            q += s.q[c];
        }
        s.p[e] = p + lines[e].r * s.l[e];
        s.q[e] = q + lines[e].x * s.l[e];
    }
    s.w[0] = net.w_substation();
    for &bus in net.bfs_order() {
        for &e in net.child_lines(bus) {
            let ln = &lines[e];
            let w = s.w[bus] - 2.0 * (ln.r * s.p[e] + ln.x * s.q[e]) + ln.z2() * s.l[e];
            if !(w > 0.0) {
                return Err(Error::NoSolution(format!(
                    "squared voltage at bus {} collapses to {w:e}",
                    ln.to + 1
                )));
            }
            s.w[ln.to] = w;
        }
    }
    Ok(())
}
