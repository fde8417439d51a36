//! Empirical CVaR of a small loss sample at a few levels.

use hostcap::cvar::{cvar, cvar_argmin_t, cvar_objective, violation_fraction};

fn main() -> hostcap::Result<()> {
    let losses = [0.2, 1.4, 0.9, 3.1, 0.5, 2.2, 0.1, 1.0];
    println!("delta   cvar     argmin t  objective at t");
    for delta in [0.0, 0.25, 0.5, 0.75, 0.875] {
        let c = cvar(&losses, delta)?;
        let t = cvar_argmin_t(&losses, delta)?;
        println!("{delta:<7} {c:<8.4} {t:<9.4} {:.4}", cvar_objective(&losses, delta, t)?);
    }
    // a CVaR limit also caps how often the limit itself is exceeded
    let limit = cvar(&losses, 0.75)?;
    println!("share above {limit:.3}: {}", violation_fraction(&losses, limit));
    Ok(())
}
