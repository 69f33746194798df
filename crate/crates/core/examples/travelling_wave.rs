//! Mean-field barrier for g(x) = 1 − e^{−vx}, whose minimal solution is the
//! straight line v·t/2.
//!
//! Solves on [0, 5], then continues the grid coarsely so that the Laplace
//! identity can be checked over the whole half-line.

use supercool::densities::IntensitySpec;
use supercool::mean_field::{
    asymptotic_speed, laplace_residual, solve_minimal, uniform_grid, GammaEvalConfig, LaplaceMode,
    SolveOptions,
};
use supercool::sampling::SeedSpec;

fn main() -> supercool::Result<()> {
    let v = 1.0;
    let g = IntensitySpec::travelling_wave(v)?;
    println!("speed: {:?}", asymptotic_speed(&g));

    let cfg = GammaEvalConfig::new(50_000, SeedSpec::new(1)).with_control_variate(true);
    let grid = uniform_grid(5.0, 0.01)?;
    let (lam, rep) = solve_minimal(&g, &grid, &cfg, &SolveOptions::default())?;
    println!("{} Γ evaluations, residual {:.2e}", rep.iterations, rep.residual);
    for t in [0.5, 1.0, 2.0, 3.0, 4.0, 5.0] {
        println!("  t = {t}: Λ = {:.4}  vt/2 = {:.4}", lam.value_at(t), 0.5 * v * t);
    }

    let mut long: Vec<f64> = grid.clone();
    long.extend((1..=550).map(|k| 5.0 + 0.1 * k as f64));
    let (lam, _) = solve_minimal(&g, &long, &cfg, &SolveOptions::default())?;
    for lambda in [0.5, 1.0, 2.0] {
        let r = laplace_residual(&lam, &g, lambda, &LaplaceMode::InfiniteHorizon)?;
        println!("λ = {lambda}: lhs {:.6} rhs {:.6} |diff| {:.2e}", r.lhs, r.rhs, r.abs);
    }
    Ok(())
}
