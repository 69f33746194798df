//! Mass absorbed by a straight-line barrier: the closed form against
//! particles pushed through the same barrier with no feedback.

use supercool::closed_form::{gamma_linear, LinearBarrier};
use supercool::densities::IntensitySpec;
use supercool::particle_sim::{run_fixed_barrier, FixedBarrier, Scheme, Resample};
use supercool::sampling::{sample_ppp, SeedSpec};

fn main() -> supercool::Result<()> {
    let g = IntensitySpec::constant(1.0)?;
    let n = 20_000.0;
    let horizon = 2.0;
    let seed = SeedSpec::new(3);

    for (c, x0) in [(1.0, -1.0), (2.0, -0.5), (0.5, 0.0)] {
        let barrier = LinearBarrier::new(c, x0);
        // only particles below the barrier's final height can be hit
        let cloud = sample_ppp(&g, n, barrier.value(horizon) + 10.0, &seed)?;
        let counts = run_fixed_barrier(
            &cloud,
            &FixedBarrier::Linear(barrier),
            horizon,
            Scheme::Exact { resample: Resample::Lazy },
            &seed,
        )?;
        println!("barrier {c}·t {x0:+}:");
        for t in [0.5, 1.0, 2.0] {
            println!("  t = {t}: exact {:.5}  particles {:.5}", gamma_linear(c, x0, t), counts.value_at(t));
        }
    }
    Ok(())
}
