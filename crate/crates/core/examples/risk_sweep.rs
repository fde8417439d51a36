//! Maximum capacity as the CVaR level tightens.

use hostcap::assemble::RiskParams;
use hostcap::demo::three_bus_instance;
use hostcap::hca::{maximize_capacity, MaximizeOptions};

fn main() -> hostcap::Result<()> {
    let (net, scen) = three_bus_instance(500, 1)?;
    let opts = MaximizeOptions::default();
    println!("level  total    psi_2    psi_3    iterations");
    for level in [0.5, 0.6, 0.7, 0.8, 0.9, 0.95] {
        let r = maximize_capacity(&net, &scen, &RiskParams::uniform(level)?, &opts)?;
        println!(
            "{level:<6} {:<8.4} {:<8.4} {:<8.4} {}",
            r.objective, r.psi_star[0], r.psi_star[1], r.solver.iterations
        );
    }
    Ok(())
}
