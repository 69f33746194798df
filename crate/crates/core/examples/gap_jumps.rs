//! A density with empty bands forces the mean-field barrier to jump across
//! them. Solves on a geometric grid and lists the jumps found.

use supercool::densities::IntensitySpec;
use supercool::experiments::empty_band;
use supercool::mean_field::{geometric_grid, solve_minimal, GammaEvalConfig, SolveOptions};
use supercool::sampling::SeedSpec;

fn main() -> supercool::Result<()> {
    let ratio = 10.0;
    let g = IntensitySpec::gap_density(ratio, 0.25)?;
    let grid = geometric_grid(1e-4, 1e6, 60)?;
    let cfg = GammaEvalConfig::new(5_000, SeedSpec::new(1)).with_control_variate(true);
    let (lam, rep) = solve_minimal(&g, &grid, &cfg, &SolveOptions::default().with_cap(1e9))?;

    println!("Λ at the end: {:.1}", lam.values().last().unwrap());
    for j in &rep.jumps {
        let band = j.before.max(1e-12);
        println!(
            "t = {:.4e}: {:.3} -> {:.3}, physical size {:?}, band {:?}",
            j.time,
            j.before,
            j.after,
            j.physical_size,
            empty_band(ratio, 0.5 * (band + j.after)),
        );
    }
    Ok(())
}
