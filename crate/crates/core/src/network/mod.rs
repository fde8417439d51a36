//! Single-phase radial distribution network model.
//!
//! Buses are numbered `1..=n` in files and on the public API surface that
//! deals with files; internally every vector is 0-based, so bus `1` (the
//! substation) is index `0`, and per-bus vectors that exclude the substation
//! (capacities, irradiance, demands) use index `b - 1` for internal bus `b`.
//!
//! Lines are stored oriented parent to child (BFS from the substation), which
//! makes the sign convention of the incidence matrix deterministic regardless
//! of how the file listed them.

mod incidence;
mod oracle;

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use incidence::{build_incidence, IncidenceDecomposition};
pub use oracle::{solve_power_flow_oracle, OracleOptions};

/// Squared substation voltage used when a network file does not specify one.
pub const DEFAULT_W_SUBSTATION: f64 = 1.0;

/// Reactive-to-real ratio `tan(acos(pf))` of an inverter running at power factor `pf`.
///
/// A 0.97 power factor gives roughly 0.251.
pub fn eta_from_power_factor(pf: f64) -> f64 {
    pf.acos().tan()
}

/// One distribution line. Bus indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub s_max: f64,
}

impl Line {
    /// `r^2 + x^2`, the coefficient of the squared current in the voltage drop.
    pub fn z2(&self) -> f64 {
        self.r * self.r + self.x * self.x
    }
}

/// Validated radial network with limits and capacity caps.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialNetwork {
    buses: usize,
    lines: Vec<Line>,
    w_min: Vec<f64>,
    w_max: Vec<f64>,
    psi_max: Vec<f64>,
    eta_g: Vec<f64>,
    w_substation: f64,
    parent_line: Vec<Option<usize>>,
    child_lines: Vec<Vec<usize>>,
    bfs_order: Vec<usize>,
}

/// Builder-style description of a network before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub buses: usize,
    /// `(from, to, r, x, s_max)` with 1-based bus numbers.
    pub edges: Vec<(usize, usize, f64, f64, f64)>,
    pub w_min: Vec<f64>,
    pub w_max: Vec<f64>,
    pub psi_max: Vec<f64>,
    pub eta_g: Vec<f64>,
    pub w_substation: f64,
}

/// On-disk JSON form. Indices are 1-based; unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub buses: usize,
    pub edges: Vec<EdgeRecord>,
    pub w_min: Vec<f64>,
    pub w_max: Vec<f64>,
    pub psi_max: Vec<f64>,
    pub eta_g: Vec<f64>,
    #[serde(default = "default_w_substation")]
    pub w_substation: f64,
}

fn default_w_substation() -> f64 {
    DEFAULT_W_SUBSTATION
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub s_max: f64,
}

/// Per-scenario power-flow variables: sending-end flows `p`, `q` and squared
/// current `l` per line, squared voltage `w` per bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub l: Vec<f64>,
    pub w: Vec<f64>,
}

impl FlowState {
    pub fn zeros(n: usize, w_substation: f64) -> Self {
        FlowState {
            p: vec![0.0; n - 1],
            q: vec![0.0; n - 1],
            l: vec![0.0; n - 1],
            w: vec![w_substation; n],
        }
    }

    /// Squared apparent power `P^2 + Q^2` per line.
    pub fn apparent_power_sq(&self) -> Vec<f64> {
        self.p
            .iter()
            .zip(&self.q)
            .map(|(p, q)| p * p + q * q)
            .collect()
    }
}

impl RadialNetwork {
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        let n = spec.buses;
        if n < 2 {
            return Err(Error::InvalidNetwork(format!(
                "need at least 2 buses, got {n}"
            )));
        }
        let check_len = |name: &str, len: usize, want: usize| {
            if len != want {
                Err(Error::dims(format!("{name} has length {len}, expected {want}")))
            } else {
                Ok(())
            }
        };
        check_len("edges", spec.edges.len(), n - 1)?;
        check_len("w_min", spec.w_min.len(), n)?;
        check_len("w_max", spec.w_max.len(), n)?;
        check_len("psi_max", spec.psi_max.len(), n - 1)?;
        check_len("eta_g", spec.eta_g.len(), n - 1)?;

        for (k, &(from, to, r, x, s_max)) in spec.edges.iter().enumerate() {
            if from < 1 || from > n || to < 1 || to > n {
                return Err(Error::InvalidNetwork(format!(
                    "edge {} ({from}->{to}) references a bus outside 1..={n}",
                    k + 1
                )));
            }
            if !(r >= 0.0) || !r.is_finite() || !x.is_finite() {
                return Err(Error::InvalidNetwork(format!(
                    "edge {} has invalid impedance r={r}, x={x}",
                    k + 1
                )));
            }
            if !(s_max > 0.0) || !s_max.is_finite() {
                return Err(Error::InvalidNetwork(format!(
                    "edge {} has non-positive s_max {s_max}",
                    k + 1
                )));
            }
        }
        for b in 0..n {
            let (lo, hi) = (spec.w_min[b], spec.w_max[b]);
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::InvalidNetwork(format!(
                    "bus {} voltage limits must satisfy 0 < w_min < w_max (got {lo}, {hi})",
                    b + 1
                )));
            }
        }
        if let Some(j) = spec.psi_max.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidNetwork(format!(
                "psi_max at bus {} must be finite and nonnegative",
                j + 2
            )));
        }
        if spec.eta_g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidNetwork("eta_g must be finite".into()));
        }
        if !(spec.w_substation > 0.0) || !spec.w_substation.is_finite() {
            return Err(Error::InvalidNetwork(format!(
                "w_substation must be positive, got {}",
                spec.w_substation
            )));
        }

        let pairs: Vec<(usize, usize)> = spec.edges.iter().map(|e| (e.0, e.1)).collect();
        let tree = TreeOrientation::from_edges(n, &pairs)?;

        let lines = spec
            .edges
            .iter()
            .enumerate()
            .map(|(k, &(_, _, r, x, s_max))| Line {
                from: tree.oriented[k].0,
                to: tree.oriented[k].1,
                r,
                x,
                s_max,
            })
            .collect();

        Ok(RadialNetwork {
            buses: n,
            lines,
            w_min: spec.w_min,
            w_max: spec.w_max,
            psi_max: spec.psi_max,
            eta_g: spec.eta_g,
            w_substation: spec.w_substation,
            parent_line: tree.parent_line,
            child_lines: tree.child_lines,
            bfs_order: tree.bfs_order,
        })
    }

    pub fn from_file_record(file: NetworkFile) -> Result<Self> {
        if file.edges.len() + 1 != file.buses {
            return Err(Error::dims(format!(
                "{} edges listed for {} buses (need n-1)",
                file.edges.len(),
                file.buses
            )));
        }
        RadialNetwork::new(NetworkSpec {
            buses: file.buses,
            edges: file
                .edges
                .iter()
                .map(|e| (e.from, e.to, e.r, e.x, e.s_max))
                .collect(),
            w_min: file.w_min,
            w_max: file.w_max,
            psi_max: file.psi_max,
            eta_g: file.eta_g,
            w_substation: file.w_substation,
        })
    }

    pub fn to_file_record(&self) -> NetworkFile {
        NetworkFile {
            buses: self.buses,
            edges: self
                .lines
                .iter()
                .map(|l| EdgeRecord {
                    from: l.from + 1,
                    to: l.to + 1,
                    r: l.r,
                    x: l.x,
                    s_max: l.s_max,
                })
                .collect(),
            w_min: self.w_min.clone(),
            w_max: self.w_max.clone(),
            psi_max: self.psi_max.clone(),
            eta_g: self.eta_g.clone(),
            w_substation: self.w_substation,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        Self::from_file_record(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_record()).expect("network serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    /// Number of buses, substation included.
    pub fn n(&self) -> usize {
        self.buses
    }

    /// Number of lines (`n - 1`), which is also the number of capacity entries.
    pub fn num_lines(&self) -> usize {
        self.buses - 1
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn w_min(&self) -> &[f64] {
        &self.w_min
    }

    pub fn w_max(&self) -> &[f64] {
        &self.w_max
    }

    pub fn psi_max(&self) -> &[f64] {
        &self.psi_max
    }

    pub fn eta_g(&self) -> &[f64] {
        &self.eta_g
    }

    pub fn w_substation(&self) -> f64 {
        self.w_substation
    }

    /// Line feeding `bus` (0-based), `None` for the substation.
    pub fn parent_line(&self, bus: usize) -> Option<usize> {
        self.parent_line[bus]
    }

    /// Lines leaving `bus` (0-based).
    pub fn child_lines(&self, bus: usize) -> &[usize] {
        &self.child_lines[bus]
    }

    /// Buses in breadth-first order from the substation.
    pub fn bfs_order(&self) -> &[usize] {
        &self.bfs_order
    }

    pub fn incidence(&self) -> IncidenceDecomposition {
        let pairs: Vec<(usize, usize)> =
            self.lines.iter().map(|l| (l.from + 1, l.to + 1)).collect();
        build_incidence(self.buses, &pairs).expect("validated network is a tree")
    }

    /// Copy with a replaced capacity cap, used when exploring boxes.
    pub fn with_psi_max(&self, psi_max: Vec<f64>) -> Result<Self> {
        if psi_max.len() != self.num_lines() {
            return Err(Error::dims("psi_max length"));
        }
        let mut out = self.clone();
        out.psi_max = psi_max;
        Ok(out)
    }

    /// SHA-256 over every numeric field, used for knowledge-base provenance.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"hostcap-network-v1");
        h.update((self.buses as u64).to_le_bytes());
        for l in &self.lines {
            h.update((l.from as u64).to_le_bytes());
            h.update((l.to as u64).to_le_bytes());
            for v in [l.r, l.x, l.s_max] {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        for v in self
            .w_min
            .iter()
            .chain(&self.w_max)
            .chain(&self.psi_max)
            .chain(&self.eta_g)
            .chain(std::iter::once(&self.w_substation))
        {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Net injections `alpha*psi - p_d`, `eta*alpha*psi - q_d` for one scenario.
    pub fn injections(
        &self,
        alpha: &[f64],
        p_d: &[f64],
        q_d: &[f64],
        psi: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        injections(&self.eta_g, alpha, p_d, q_d, psi)
    }

    /// Largest absolute residual of each of the four branch-flow relations
    /// (real balance, reactive balance, voltage drop, loss equality), evaluated
    /// through the incidence matrices.
    pub fn flow_residuals(&self, p_inj: &[f64], q_inj: &[f64], state: &FlowState) -> [f64; 4] {
        let inc = self.incidence();
        let r: Vec<f64> = self.lines.iter().map(|l| l.r).collect();
        let x: Vec<f64> = self.lines.iter().map(|l| l.x).collect();
        let bal_p = inc.balance(&state.p, &r, &state.l);
        let bal_q = inc.balance(&state.q, &x, &state.l);
        let drop = inc.voltage_difference(&state.w);
        let send = inc.sending_voltage(&state.w);

        let max_abs = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0_f64, |m, v| m.max(v.abs()));
        let r_p = max_abs(&mut bal_p.iter().zip(p_inj).map(|(a, b)| a - b));
        let r_q = max_abs(&mut bal_q.iter().zip(q_inj).map(|(a, b)| a - b));
        let r_w = max_abs(&mut self.lines.iter().enumerate().map(|(e, ln)| {
            drop[e] - 2.0 * (ln.r * state.p[e] + ln.x * state.q[e]) + ln.z2() * state.l[e]
        }));
        let r_l = max_abs(&mut (0..self.num_lines()).map(|e| {
            send[e] * state.l[e] - state.p[e] * state.p[e] - state.q[e] * state.q[e]
        }));
        [r_p, r_q, r_w, r_l]
    }
}

/// Net injections for capacity `psi` under irradiance `alpha` and demands.
pub fn injections(
    eta_g: &[f64],
    alpha: &[f64],
    p_d: &[f64],
    q_d: &[f64],
    psi: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = eta_g.len();
    for (name, v) in [("alpha", alpha), ("p_d", p_d), ("q_d", q_d), ("psi", psi)] {
        if v.len() != m {
            return Err(Error::dims(format!(
                "{name} has length {}, expected {m}",
                v.len()
            )));
        }
    }
    let p = (0..m).map(|j| alpha[j] * psi[j] - p_d[j]).collect();
    let q = (0..m)
        .map(|j| eta_g[j] * alpha[j] * psi[j] - q_d[j])
        .collect();
    Ok((p, q))
}

struct TreeOrientation {
    oriented: Vec<(usize, usize)>,
    parent_line: Vec<Option<usize>>,
    child_lines: Vec<Vec<usize>>,
    bfs_order: Vec<usize>,
}

impl TreeOrientation {
    /// Orient 1-based `edges` parent to child by BFS from bus 1; errors unless
    /// they form a spanning tree.
    fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if edges.len() + 1 != n {
            return Err(Error::GraphNotTree(format!(
                "{} edges for {n} buses",
                edges.len()
            )));
        }
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (k, &(a, b)) in edges.iter().enumerate() {
            if a < 1 || a > n || b < 1 || b > n {
                return Err(Error::GraphNotTree(format!(
                    "edge {} ({a}->{b}) references a bus outside 1..={n}",
                    k + 1
                )));
            }
            if a == b {
                return Err(Error::GraphNotTree(format!("edge {} is a self loop", k + 1)));
            }
            adj[a - 1].push((b - 1, k));
            adj[b - 1].push((a - 1, k));
        }
        let mut parent_line = vec![None; n];
        let mut visited = vec![false; n];
        let mut oriented = vec![(usize::MAX, usize::MAX); edges.len()];
        let mut bfs_order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([0usize]);
        visited[0] = true;
        while let Some(u) = queue.pop_front() {
            bfs_order.push(u);
            for &(v, k) in &adj[u] {
                if Some(k) == parent_line[u] {
                    continue;
                }
                if visited[v] {
                    return Err(Error::GraphNotTree(format!(
                        "cycle through bus {} and bus {}",
                        u + 1,
                        v + 1
                    )));
                }
                visited[v] = true;
                parent_line[v] = Some(k);
                oriented[k] = (u, v);
                queue.push_back(v);
            }
        }
        if let Some(b) = visited.iter().position(|v| !v) {
            return Err(Error::GraphNotTree(format!(
                "bus {} is not connected to the substation",
                b + 1
            )));
        }
        let mut child_lines = vec![Vec::new(); n];
        for (k, &(from, _)) in oriented.iter().enumerate() {
            child_lines[from].push(k);
        }
        Ok(TreeOrientation {
            oriented,
            parent_line,
            child_lines,
            bfs_order,
        })
    }
}
