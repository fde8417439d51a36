//! Maximize total solar capacity on the demo feeder and write the inputs and
//! the result to a directory (first argument, default `target/demo`) so the
//! `hostcap` binary can be pointed at them.

use hostcap::assemble::RiskParams;
use hostcap::cli::stable_json;
use hostcap::demo::three_bus_instance;
use hostcap::hca::{maximize_capacity, MaximizeOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "target/demo".into());
    std::fs::create_dir_all(&dir)?;
    let (net, scen) = three_bus_instance(500, 1)?;
    net.save(format!("{dir}/network.json"))?;
    scen.save(format!("{dir}/scenarios.csv"))?;

    let risk = RiskParams::uniform(0.8)?;
    let res = maximize_capacity(&net, &scen, &risk, &MaximizeOptions::default())?;
    println!("psi* = {:.4?}  total {:.4} p.u.", res.psi_star, res.objective);
    println!(
        "violation shares: upper {:?} lower {:?} flow {:?} (bound {:.2})",
        res.violations.upper_voltage,
        res.violations.lower_voltage,
        res.violations.flow,
        1.0 - risk.nu
    );
    std::fs::write(format!("{dir}/result.json"), stable_json(&res)?)?;
    println!("wrote {dir}/network.json, scenarios.csv, result.json");
    Ok(())
}
