//! A run described by a TOML file: write the config, load it back, execute
//! it and list what landed on disk.

use supercool::cli_io::{execute, load_config, load_manifest, save_config, Job, RunConfig, SimulateJob};
use supercool::densities::IntensitySpec;
use supercool::particle_sim::SimConfig;
use supercool::sampling::SeedSpec;

fn main() -> supercool::Result<()> {
    let dir = std::env::temp_dir().join("supercool-run-config");
    let system = SimConfig::n_system(IntensitySpec::constant(0.5)?, 2_000.0, 1.0, SeedSpec::new(5));
    let cfg = RunConfig {
        output_dir: dir.join("out"),
        workers: Some(1),
        job: Job::Simulate(SimulateJob { system, replicas: 4, allow_explosion: false }),
    };
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("run.toml");
    save_config(&path, &cfg)?;
    println!("{}", std::fs::read_to_string(&path)?);

    let loaded = load_config(&path)?;
    assert_eq!(loaded, cfg);
    let out = execute(&loaded)?;
    println!("{}", out.message);

    let manifest = load_manifest(&loaded.output_dir.join("manifest.json"))?;
    for f in manifest.files {
        println!("{:<14} {:>7} bytes  {}", f.name, f.bytes, &f.sha256[..16]);
    }
    Ok(())
}
