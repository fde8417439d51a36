//! Post-hoc checks on a capacity solution: relaxation gaps, closed-form CVaR
//! against the limits, and violation shares.

use hostcap::assemble::RiskParams;
use hostcap::demo::three_bus_instance;
use hostcap::hca::{maximize_capacity, MaximizeOptions};
use hostcap::validate::validate;

fn main() -> hostcap::Result<()> {
    let (net, scen) = three_bus_instance(300, 5)?;
    let res = maximize_capacity(&net, &scen, &RiskParams::uniform(0.9)?, &MaximizeOptions::default())?;
    let report = validate(&res, &scen, &net)?;
    println!(
        "gap: max {:.3e} min {:.3e}; {} of {} entries not tight",
        report.gap.max_gap,
        report.gap.min_gap,
        report.gap.loose.len(),
        scen.len() * net.num_lines()
    );
    for e in &report.cvar.entries {
        println!("{:?} {}: cvar {:.5} limit {:.5}", e.kind, e.index, e.cvar, e.limit);
    }
    print!("{}", report.histogram.to_csv()?);
    println!("all assertions hold: {}", report.passed());
    Ok(())
}
