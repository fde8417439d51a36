//! Exact branch-flow solution on the demo feeder, and how far the convex
//! relaxation would be from it.

use hostcap::demo::three_bus_network;
use hostcap::network::{solve_power_flow_oracle, OracleOptions};

fn main() -> hostcap::Result<()> {
    let net = three_bus_network();
    // 0.8 p.u. of sun on 2 p.u. of panels per bus, light load
    let (p, q) = net.injections(&[0.8, 0.8], &[0.3, 0.3], &[0.1, 0.1], &[2.0, 2.0])?;
    let st = solve_power_flow_oracle(&net, &p, &q, &OracleOptions::default())?;
    for j in 0..net.n() {
        println!("bus {} |V| = {:.5} p.u.", j + 1, st.w[j].sqrt());
    }
    for (e, ln) in net.lines().iter().enumerate() {
        println!(
            "line {}-{}: P {:+.4} Q {:+.4} loss {:.3e}",
            ln.from + 1,
            ln.to + 1,
            st.p[e],
            st.q[e],
            ln.r * st.l[e]
        );
    }
    let [rp, rq, rw, rl] = net.flow_residuals(&p, &q, &st);
    println!("residuals: {rp:.1e} {rq:.1e} {rw:.1e} {rl:.1e}");
    Ok(())
}
