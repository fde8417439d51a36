//! Spread of the optimal capacity when only part of the scenario set is used.

use hostcap::assemble::RiskParams;
use hostcap::demo::three_bus_instance;
use hostcap::hca::{subsample_study, MaximizeOptions};

fn main() -> hostcap::Result<()> {
    let (net, scen) = three_bus_instance(1000, 3)?;
    let risk = RiskParams::uniform(0.8)?;
    let rows = subsample_study(&net, &scen, &risk, &[50, 200, 1000], 10, 42, &MaximizeOptions::default())?;
    for r in rows {
        println!("size {:>5}: mean {:.4}  std {:.4}  ({} of {} solved)", r.size, r.mean, r.std, r.solved, r.trials);
    }
    Ok(())
}
