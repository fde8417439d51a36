//! A stream of random candidate installations checked against a growing
//! knowledge base; most are settled without a conic solve.

use hostcap::accept::{test, AcceptOptions, KnowledgeBase, Method};
use hostcap::assemble::RiskParams;
use hostcap::demo::three_bus_instance;
use hostcap::rng::SeededRng;

fn main() -> hostcap::Result<()> {
    let (net, scen) = three_bus_instance(100, 11)?;
    let risk = RiskParams::uniform(0.8)?;
    let mut kb = KnowledgeBase::new(&net, &scen, &risk);
    let opts = AcceptOptions::default();
    let mut rng = SeededRng::new(1);
    let mut full = [0usize; 4];
    for i in 0..400 {
        let psi = [rng.uniform_in(0.0, 4.0), rng.uniform_in(0.0, 4.0)];
        if test(&mut kb, &net, &scen, &risk, &psi, &opts)?.method == Method::FullSolve {
            full[i / 100] += 1;
        }
    }
    println!("full solves per block of 100 tests: {full:?}");
    println!("{} accepted generators, {} cuts", kb.accepted.len(), kb.cuts.len());
    println!("test                       count  mean (s)");
    for row in kb.stats.summary() {
        println!("{:<26} {:<6} {:.3e}", row.label, row.count, row.mean_seconds);
    }
    Ok(())
}
