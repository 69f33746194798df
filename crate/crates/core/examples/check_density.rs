//! Structural conditions for the built-in families.

use supercool::densities::{check_conditions, IntensitySpec, Scan};

fn main() -> supercool::Result<()> {
    let cases = [
        ("constant 0.5", IntensitySpec::constant(0.5)?),
        ("constant 1.5", IntensitySpec::constant(1.5)?),
        ("travelling wave v=1", IntensitySpec::travelling_wave(1.0)?),
        ("gap L=10", IntensitySpec::gap_density(10.0, 0.25)?),
        ("heavy tail β=0.5", IntensitySpec::heavy_tail(0.5)?),
        ("2·(1 − e^{−x})", IntensitySpec::scaled_exponential(2.0, 1.0)?),
    ];
    let scan = Scan::default();
    println!("{:<22} {:>5} {:>5} {:>13} {:>13} {:>5} {:>8}", "density", "A1", "A2", "A3", "A4", "W", "blow-up");
    for (name, g) in cases {
        let r = check_conditions(&g, &scan);
        let yes = |b: bool| if b { "yes" } else { "no" };
        println!(
            "{name:<22} {:>5} {:>5} {:>13} {:>13} {:>5} {:>8}",
            yes(r.a1.holds),
            yes(r.a2.holds),
            format!("{:?}", r.a3.verdict),
            format!("{:?}", r.a4.verdict),
            yes(r.w.holds),
            r.blowup.map_or("-".to_string(), |w| format!("x={}", w.x)),
        );
    }
    Ok(())
}
