//! The exact event-driven simulation against a time-stepped one with the
//! bridge crossing check. Means over replicas should agree within noise.

use supercool::densities::IntensitySpec;
use supercool::numerics::mean_se;
use supercool::particle_sim::{run, Resample, Scheme, SimConfig};
use supercool::sampling::SeedSpec;

fn main() -> supercool::Result<()> {
    let g = IntensitySpec::constant(0.5)?;
    let n = 500.0;
    let reps = 100;
    let finals = |scheme: Scheme, root: u64| -> supercool::Result<Vec<f64>> {
        (0..reps)
            .map(|r| {
                let c = SimConfig::n_system(g.clone(), n, 1.0, SeedSpec::new(root).replica(r)).with_scheme(scheme);
                Ok(run(&c)?.final_barrier())
            })
            .collect()
    };
    let (me, se_e) = mean_se(&finals(Scheme::Exact { resample: Resample::Lazy }, 1)?);
    let (mu, se_u) = mean_se(&finals(Scheme::Euler { dt: 1e-3 }, 2)?);
    println!("exact  Λ_1 = {me:.4} ± {se_e:.4}");
    println!("euler  Λ_1 = {mu:.4} ± {se_u:.4}");
    println!("difference in standard errors: {:.2}", (me - mu).abs() / (se_e * se_e + se_u * se_u).sqrt());
    Ok(())
}
