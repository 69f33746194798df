use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use proptest::prelude::*;
use supercool::cli_io::{
    cli_main, config_to_toml, execute, load_manifest, parse_config, CriticalJob, GridSpec, Job, RunConfig,
    SimulateJob, SolveJob,
};
use supercool::densities::IntensitySpec;
use supercool::mean_field::{GammaEvalConfig, SolveOptions};
use supercool::particle_sim::SimConfig;
use supercool::sampling::SeedSpec;
use supercool::Error;

fn seed_strategy() -> impl Strategy<Value = SeedSpec> {
    (0..i64::MAX as u64, 0..1000u64).prop_map(|(root, r)| SeedSpec::new(root).replica(r))
}

fn job_strategy() -> impl Strategy<Value = Job> {
    prop_oneof![
        (0.01f64..0.99).prop_map(|a| Job::Kalpha { a }),
        (-3.0f64..3.0, -2.0f64..2.0, 0.0f64..10.0).prop_map(|(c, intercept, t)| Job::GammaLinear { c, intercept, t }),
        (0.05f64..0.95, 10.0f64..1e4, 0.1f64..5.0, seed_strategy(), 1usize..20).prop_map(|(a, n, h, seed, replicas)| {
            let system = SimConfig::n_system(IntensitySpec::constant(a).unwrap(), n, h, seed);
            Job::Simulate(SimulateJob { system, replicas, allow_explosion: false })
        }),
        (0.1f64..3.0, 100usize..100_000, seed_strategy(), any::<bool>()).prop_map(|(v, paths, seed, cv)| {
            Job::Solve(SolveJob {
                intensity: IntensitySpec::travelling_wave(v).unwrap(),
                grid: GridSpec::Uniform { horizon: 2.0, dt: 0.01 },
                gamma: GammaEvalConfig::new(paths, seed).with_control_variate(cv),
                options: SolveOptions::default(),
                allow_explosion: false,
                laplace: vec![0.5, 1.0],
            })
        }),
        (1e-4f64..1e-2, 1.0f64..100.0, seed_strategy()).prop_map(|(dx, x_cap, seed)| Job::Critical(CriticalJob {
            times: vec![0.0, 0.5, 1.0],
            dx,
            x_cap,
            samples: 10,
            seed,
        })),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn config_round_trips_through_toml(job in job_strategy(), workers in proptest::option::of(1usize..16)) {
        let cfg = RunConfig { output_dir: "out/x".into(), workers, job };
        let text = config_to_toml(&cfg).unwrap();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

const KALPHA: &str = r#"
output_dir = "out/k"

[job]
kind = "kalpha"
a = 0.5
"#;

#[test]
fn missing_field_is_named() {
    let text = KALPHA.replace("a = 0.5", "");
    let Err(Error::Config(msg)) = parse_config(&text) else { panic!("accepted a config without a") };
    assert!(msg.contains("`a`"), "{msg}");
    let text = KALPHA.replace("output_dir = \"out/k\"", "");
    let Err(Error::Config(msg)) = parse_config(&text) else { panic!("accepted a config without output_dir") };
    assert!(msg.contains("output_dir"), "{msg}");
}

#[test]
fn unknown_field_is_rejected() {
    assert!(parse_config(KALPHA).is_ok());
    let text = KALPHA.replace("a = 0.5", "a = 0.5\nalpha = 0.5");
    let Err(Error::Config(msg)) = parse_config(&text) else { panic!("accepted an unknown field") };
    assert!(msg.contains("alpha"), "{msg}");
    let text = format!("colour = \"red\"\n{KALPHA}");
    assert!(parse_config(&text).is_err());
    let text = KALPHA.replace("kalpha", "kalpa");
    assert!(parse_config(&text).is_err());
}

fn read_all(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn simulate_config(dir: &Path, replicas: usize) -> RunConfig {
    let system = SimConfig::n_system(IntensitySpec::constant(0.5).unwrap(), 500.0, 1.0, SeedSpec::new(77));
    RunConfig { output_dir: dir.into(), workers: None, job: Job::Simulate(SimulateJob { system, replicas, allow_explosion: false }) }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = simulate_config(tmp.path(), 6);
    let out = execute(&cfg).unwrap();
    let first = read_all(tmp.path());
    assert_eq!(first.len(), out.files.len() + 1);
    // from the saved manifest, with a different pool size
    let loaded = load_manifest(&tmp.path().join("manifest.json")).unwrap();
    assert_eq!(loaded.config, cfg);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    pool.install(|| execute(&loaded.config)).unwrap();
    assert_eq!(read_all(tmp.path()), first);
    let crit = RunConfig {
        output_dir: tmp.path().join("crit"),
        workers: None,
        job: Job::Critical(CriticalJob { times: vec![0.2, 1.0], dx: 1e-3, x_cap: 20.0, samples: 30, seed: SeedSpec::new(5) }),
    };
    execute(&crit).unwrap();
    let a = read_all(&crit.output_dir);
    execute(&crit).unwrap();
    assert_eq!(read_all(&crit.output_dir), a);
}

#[test]
fn data_files_carry_the_header() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = simulate_config(tmp.path(), 2);
    execute(&cfg).unwrap();
    let text = fs::read_to_string(tmp.path().join("replicas.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# schema_version=1");
    let config: RunConfig = serde_json::from_str(lines[1].strip_prefix("# config=").unwrap()).unwrap();
    assert_eq!(config, cfg);
    let seed: SeedSpec = serde_json::from_str(lines[2].strip_prefix("# seed=").unwrap()).unwrap();
    assert_eq!(seed, SeedSpec::new(77));
    assert!(lines[3].starts_with("replica,status,final_barrier"));
    assert_eq!(lines.len(), 6);
    let manifest = load_manifest(&tmp.path().join("manifest.json")).unwrap();
    let names: Vec<&str> = manifest.files.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, ["events.csv", "replicas.csv", "summary.json"]);
    for f in &manifest.files {
        assert_eq!(f.sha256.len(), 64);
        assert_eq!(f.bytes, fs::metadata(tmp.path().join(&f.name)).unwrap().len());
    }
}

fn run(args: &[&str]) -> i32 {
    cli_main(std::iter::once("supercool").chain(args.iter().copied()))
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(run(&["kalpha", "0.5", "--out", out]), 0);
    assert!(tmp.path().join("result.json").exists());
    assert_eq!(run(&["gamma-linear", "1", "-1", "2", "--out", out]), 0);
    assert_eq!(run(&["kalpha", "1.5", "--out", out]), 1);
    // condition checks are informational
    assert_eq!(run(&["check-density", "--family", "constant", "--a", "1.5", "--out", out]), 0);
    assert_eq!(run(&["no-such-command"]), 1);
    assert_eq!(run(&["kalpha"]), 1);
    // a supercritical density with no cap is refused before running
    let code = run(&["simulate", "--family", "constant", "--a", "3", "--n", "100", "--out", out]);
    assert_eq!(code, 1);
    // with a cap it runs, explodes, and that is a numeric failure unless allowed
    let sim = ["simulate", "--family", "constant", "--a", "3", "--n", "100", "--cap", "5", "--out", out];
    assert_eq!(run(&sim), 2);
    let mut allowed = sim.to_vec();
    allowed.push("--allow-explosion");
    assert_eq!(run(&allowed), 0);
    let cfg = tmp.path().join("k.toml");
    fs::write(&cfg, KALPHA.replace("out/k", out)).unwrap();
    assert_eq!(run(&["solve", "--config", cfg.to_str().unwrap()]), 1);
    assert_eq!(run(&["kalpha", "0.25", "--out", out, "--workers", "2"]), 0);
}
