//! Unit density: Λ^N_1 / N^{1/3} against the limit R_1 built from a
//! Brownian path in space.
//!
//! R_1 has a heavy upper tail, so both samples are cut at 50 and compared
//! by quantiles and the KS distance.

use supercool::experiments::{ks_distance, r_samples, rescaled_barrier};
use supercool::numerics::quantile;
use supercool::particle_sim::{Resample, Scheme};
use supercool::sampling::SeedSpec;

fn main() -> supercool::Result<()> {
    let cap = 50.0;
    let seed = SeedSpec::new(11);
    let r = r_samples(1.0, 1e-3, cap, 2_000, seed)?;

    let n = 500.0;
    let scheme = Scheme::Exact { resample: Resample::Lazy };
    let p: Vec<f64> = (0..200)
        .map(|i| rescaled_barrier(n, 1.0, cap, scheme, seed.replica(i)))
        .collect::<supercool::Result<_>>()?;

    for (name, s) in [("R_1", &r), ("particles", &p)] {
        println!(
            "{name:>10}: q25 {:.3}  median {:.3}  q75 {:.3}",
            quantile(s, 0.25),
            quantile(s, 0.5),
            quantile(s, 0.75)
        );
    }
    println!("KS distance: {:.3}", ks_distance(&r, &p)?);
    Ok(())
}
