//! How much Γ amplifies a small lift of the solution. Below 1 whenever the
//! density stays under 1, which is what makes Picard iteration converge.

use supercool::densities::IntensitySpec;
use supercool::mean_field::{estimate_contraction, solve_minimal, uniform_grid, GammaEvalConfig, SolveOptions};
use supercool::sampling::SeedSpec;

fn main() -> supercool::Result<()> {
    let cfg = GammaEvalConfig::new(20_000, SeedSpec::new(2)).with_control_variate(true);
    let grid = uniform_grid(2.0, 0.01)?;
    for (name, g) in [
        ("constant 0.5", IntensitySpec::constant(0.5)?),
        ("constant 0.9", IntensitySpec::constant(0.9)?),
        ("travelling wave v=1", IntensitySpec::travelling_wave(1.0)?),
    ] {
        let (lam, _) = solve_minimal(&g, &grid, &cfg, &SolveOptions::default())?;
        let c = estimate_contraction(&g, &lam, 1e-2, 2.0, &cfg)?;
        println!("{name:<20} κ = {:.4} ± {:.4} at t = {:.2} (weak feedback: {})", c.kappa, c.se, c.argmax, c.weak_feedback);
    }
    Ok(())
}
