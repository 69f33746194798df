//! One absorption can set off more: each one lifts the barrier by a and may
//! sweep up the next particle. The fast resolver skips straight to the
//! count in the current interval; the brute one tries k = 1, 2, ...

use supercool::particle_sim::{resolve_cascade, resolve_cascade_brute};

fn main() -> supercool::Result<()> {
    let a = 0.1;
    let b = 0.0;
    let cases: [&[f64]; 4] = [
        &[0.0, 0.5, 0.9],
        &[0.0, 0.05, 0.15, 0.25, 0.6],
        &[0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
        &[0.0, 0.0, 0.0, 0.35],
    ];
    for pos in cases {
        let fast = resolve_cascade(pos, b, a)?;
        let slow = resolve_cascade_brute(pos, b, a);
        println!("{pos:?}: {fast} absorbed (brute force {slow})");
    }
    Ok(())
}
