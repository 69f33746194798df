//! Constant density a < 1: the barrier grows like K_a·√t.
//!
//! Prints K_a for a few levels, then runs the particle system with a = 0.5
//! and compares ξ_T/√T with K_a at growing T.

use supercool::closed_form::k_alpha;
use supercool::densities::IntensitySpec;
use supercool::particle_sim::{run, SimConfig};
use supercool::sampling::SeedSpec;

fn main() -> supercool::Result<()> {
    for a in [0.1, 0.25, 0.5, 0.75, 0.9] {
        println!("K_{a:<4} = {:.10}", k_alpha(a)?);
    }

    let a = 0.5;
    let k = k_alpha(a)?;
    let g = IntensitySpec::constant(a)?;
    println!("\n{:>8} {:>10} {:>10}", "T", "ξ_T/√T", "K_a");
    for t in [1e2f64, 1e3, 1e4] {
        // ξ at time T is N·a·Λ^N at time 1 once N = √T/a
        let n = t.sqrt() / a;
        let log = run(&SimConfig::n_system(g.clone(), n, 1.0, SeedSpec::new(7)))?;
        let ratio = n * a * log.final_barrier() / t.sqrt();
        println!("{t:>8} {ratio:>10.4} {k:>10.4}");
    }
    Ok(())
}
