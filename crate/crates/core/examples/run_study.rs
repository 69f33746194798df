//! Runs one replicated study with its default configuration and prints the
//! checks. Pass the id as the first argument (default: similarity).
//!
//!     cargo run --release --example run_study -- gap

use supercool::experiments::{run_experiment, ExperimentConfig};
use supercool::sampling::SeedSpec;

fn main() -> supercool::Result<()> {
    let id = std::env::args().nth(1).unwrap_or_else(|| "similarity".into());
    let cfg = ExperimentConfig::default_for(&id, SeedSpec::new(2024))?;
    let summary = run_experiment(&cfg)?;
    for (k, v) in &summary.stats {
        match v {
            Some(x) => println!("{k:>24} = {x:.6}"),
            None => println!("{k:>24} = -"),
        }
    }
    for c in &summary.checks {
        println!("check {}: {:?} ({}) -> {:?}", c.name, c.value, c.rule, c.passed);
    }
    println!("outcome: {:?}", summary.outcome);
    Ok(())
}
