//! Save a knowledge base, reload it, and replay the same candidates: the
//! second pass needs no conic solves.

use hostcap::accept::{load_kb, save_kb, test, AcceptOptions, KnowledgeBase, Method, Provenance};
use hostcap::assemble::RiskParams;
use hostcap::demo::three_bus_instance;
use hostcap::rng::SeededRng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (net, scen) = three_bus_instance(60, 2)?;
    let risk = RiskParams::uniform(0.6)?;
    let opts = AcceptOptions::default();
    let mut rng = SeededRng::new(5);
    let stream: Vec<[f64; 2]> = (0..80).map(|_| [rng.uniform_in(0.0, 4.0), rng.uniform_in(0.0, 4.0)]).collect();

    let mut kb = KnowledgeBase::new(&net, &scen, &risk);
    for psi in &stream {
        test(&mut kb, &net, &scen, &risk, psi, &opts)?;
    }
    let path = std::env::temp_dir().join("hostcap-demo-kb.json");
    save_kb(&kb, &path)?;

    let mut again = load_kb(&path, &Provenance::of(&net, &scen, &risk))?;
    let mut solves = 0;
    for psi in &stream {
        if test(&mut again, &net, &scen, &risk, psi, &opts)?.method == Method::FullSolve {
            solves += 1;
        }
    }
    println!("first pass: {} full solves; replay after reload: {solves}", kb.stats.count(Method::FullSolve));
    std::fs::remove_file(&path)?;
    Ok(())
}
