//! A small desk instance: a three-bus feeder and a synthetic scenario
//! generator. Used by the examples, the CLI smoke tests and the acceptance
//! suite; it is not calibrated to any real feeder.

use crate::error::Result;
use crate::network::{eta_from_power_factor, NetworkSpec, RadialNetwork};
use crate::rng::SeededRng;
use crate::scenario::ScenarioSet;

/// Feeder `1 - 2 - 3` with solar at buses 2 and 3, capacities capped at 4 p.u.,
/// voltage band `[0.95, 1.05]` p.u. and inverter power factor 0.97.
pub fn three_bus_network() -> RadialNetwork {
    let eta = eta_from_power_factor(0.97);
    RadialNetwork::new(NetworkSpec {
        buses: 3,
        edges: vec![(1, 2, 0.01, 0.02, 2.0), (2, 3, 0.015, 0.02, 1.2)],
        w_min: vec![0.95 * 0.95; 3],
        w_max: vec![1.05 * 1.05; 3],
        psi_max: vec![4.0, 4.0],
        eta_g: vec![eta, eta],
        w_substation: 1.0,
    })
    .expect("demo network is a valid tree")
}

/// `k` scenarios for a network with `m` non-substation buses.
///
/// Each scenario draws a time of day and a cloud factor shared by all buses;
/// irradiance follows a clipped sine with per-bus noise, demand follows an
/// evening-peaking profile at power factor 0.95.
pub fn synthetic_scenarios(m: usize, k: usize, seed: u64) -> Result<ScenarioSet> {
    let mut rng = SeededRng::new(seed);
    let q_ratio = (1.0_f64 / (0.95 * 0.95) - 1.0).sqrt();
    let mut alpha = Vec::with_capacity(m * k);
    let mut p_d = Vec::with_capacity(m * k);
    let mut q_d = Vec::with_capacity(m * k);
    for _ in 0..k {
        let hour = rng.uniform_in(0.0, 24.0);
        let sun = (std::f64::consts::PI * (hour - 6.0) / 12.0).sin().max(0.0);
        let cloud = 0.3 + 0.7 * rng.uniform().sqrt();
        let profile = 0.75 + 0.25 * (std::f64::consts::TAU * (hour - 19.0) / 24.0).cos();
        for _ in 0..m {
            let a = sun * cloud * (1.0 + 0.05 * rng.normal());
            alpha.push(a.clamp(0.0, 1.0));
            let p = (0.3 * profile * (1.0 + 0.1 * rng.normal())).max(0.0);
            p_d.push(p);
            q_d.push(p * q_ratio);
        }
    }
    ScenarioSet::new(m, alpha, p_d, q_d)
}

/// Demo network and `k` synthetic scenarios.
pub fn three_bus_instance(k: usize, seed: u64) -> Result<(RadialNetwork, ScenarioSet)> {
    let net = three_bus_network();
    let scen = synthetic_scenarios(net.num_lines(), k, seed)?;
    Ok((net, scen))
}
