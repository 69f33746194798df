use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::jobs::{execute, CriticalJob, GridSpec, Job, SimulateJob, SolveJob};
use super::{load_config, resolve_workers, with_workers, RunConfig};
use crate::densities::{IntensitySpec, Scan};
use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;
use crate::mean_field::{GammaEvalConfig, SolveOptions};
use crate::particle_sim::{Resample, Scheme, SimConfig};
use crate::sampling::SeedSpec;

#[derive(Parser, Debug)]
#[command(name = "supercool", version, about = "Particle systems with a jumping absorbing barrier and their mean-field limit")]
struct Cli {
    /// Worker threads (falls back to SUPERCOOL_WORKERS, then the core count).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (default out/<command>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the finite particle system.
    Simulate(SimulateArgs),
    /// Solve for the minimal mean-field barrier.
    Solve(SolveArgs),
    /// The similarity constant K_a for constant density a in (0, 1).
    Kalpha { a: f64 },
    /// Exact Γ for a linear barrier ct + intercept, at time t.
    #[command(allow_negative_numbers = true)]
    GammaLinear { c: f64, intercept: f64, t: f64 },
    /// Sample the unit-density limit process R_t.
    Critical(CriticalArgs),
    /// Run a replicated study: similarity, rate, critical, gap or polynomial.
    Experiment(ExperimentArgs),
    /// Report the structural conditions of a density.
    CheckDensity(CheckArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyName {
    Constant,
    TravellingWave,
    Gap,
    HeavyTail,
    ScaledExponential,
}

#[derive(Args, Debug, Default)]
struct DensityArgs {
    #[arg(long, value_enum)]
    family: Option<FamilyName>,
    /// Constant level.
    #[arg(long)]
    a: Option<f64>,
    /// Travelling-wave speed parameter.
    #[arg(long)]
    v: Option<f64>,
    /// Gap ratio L.
    #[arg(long)]
    ratio: Option<f64>,
    /// Gap parameter, or scale of a scaled exponential.
    #[arg(long)]
    alpha: Option<f64>,
    /// Heavy-tail exponent.
    #[arg(long)]
    beta: Option<f64>,
    /// Rate of a scaled exponential.
    #[arg(long)]
    rate: Option<f64>,
}

fn need(v: Option<f64>, flag: &str) -> Result<f64> {
    v.ok_or_else(|| Error::config(format!("this family needs --{flag}")))
}

impl DensityArgs {
    fn build(&self) -> Result<IntensitySpec> {
        let Some(family) = self.family else {
            return Err(Error::config("give --family or --config"));
        };
        match family {
            FamilyName::Constant => IntensitySpec::constant(need(self.a, "a")?),
            FamilyName::TravellingWave => IntensitySpec::travelling_wave(need(self.v, "v")?),
            FamilyName::Gap => IntensitySpec::gap_density(self.ratio.unwrap_or(10.0), self.alpha.unwrap_or(0.25)),
            FamilyName::HeavyTail => IntensitySpec::heavy_tail(need(self.beta, "beta")?),
            FamilyName::ScaledExponential => {
                IntensitySpec::scaled_exponential(need(self.alpha, "alpha")?, need(self.rate, "rate")?)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeName {
    Exact,
    Full,
    Euler,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    density: DensityArgs,
    /// Particles per unit mass; each absorption raises the barrier by 1/N.
    #[arg(long, default_value_t = 1000.0)]
    n: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1)]
    replicas: usize,
    /// exact (lazy resampling), full (resample every survivor) or euler.
    #[arg(long, value_enum, default_value = "exact")]
    scheme: SchemeName,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Stop a run as exploded once the barrier passes this level.
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    allow_explosion: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    density: DensityArgs,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 20_000)]
    paths: usize,
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    control_variate: bool,
    /// λ values for the Laplace residual (needs a long horizon).
    #[arg(long, value_delimiter = ',')]
    laplace: Vec<f64>,
    #[arg(long)]
    allow_explosion: bool,
}

#[derive(Args, Debug)]
struct CriticalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    times: Vec<f64>,
    #[arg(long, default_value_t = 1e-3)]
    dx: f64,
    #[arg(long, default_value_t = 50.0)]
    x_cap: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// similarity, rate, critical, gap or polynomial
    id: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    density: DensityArgs,
}

fn from_file(path: &PathBuf, expected: &str) -> Result<RunConfig> {
    let cfg = load_config(path)?;
    if cfg.job.name() != expected {
        return Err(Error::config(format!(
            "{} describes a {} job, not {expected}",
            path.display(),
            cfg.job.name()
        )));
    }
    Ok(cfg)
}

fn build(cli: &Cli) -> Result<RunConfig> {
    let default_dir = |name: &str| cli.out.clone().unwrap_or_else(|| PathBuf::from("out").join(name));
    let fresh = |job: Job| RunConfig { output_dir: default_dir(job.name()), workers: None, job };
    let mut cfg = match &cli.command {
        Command::Simulate(a) => match &a.config {
            Some(p) => from_file(p, "simulate")?,
            None => {
                let scheme = match a.scheme {
                    SchemeName::Exact => Scheme::Exact { resample: Resample::Lazy },
                    SchemeName::Full => Scheme::Exact { resample: Resample::Full },
                    SchemeName::Euler => Scheme::Euler { dt: a.dt },
                };
                let mut system = SimConfig::n_system(a.density.build()?, a.n, a.horizon, SeedSpec::new(a.seed))
                    .with_scheme(scheme);
                system.explosion_cap = a.cap;
                fresh(Job::Simulate(SimulateJob { system, replicas: a.replicas, allow_explosion: a.allow_explosion }))
            }
        },
        Command::Solve(a) => match &a.config {
            Some(p) => from_file(p, "solve")?,
            None => fresh(Job::Solve(SolveJob {
                intensity: a.density.build()?,
                grid: GridSpec::Uniform { horizon: a.horizon, dt: a.dt },
                gamma: GammaEvalConfig::new(a.paths, SeedSpec::new(a.seed)).with_control_variate(a.control_variate),
                options: SolveOptions { explosion_cap: a.cap, ..SolveOptions::default() },
                allow_explosion: a.allow_explosion,
                laplace: a.laplace.clone(),
            })),
        },
        Command::Kalpha { a } => fresh(Job::Kalpha { a: *a }),
        Command::GammaLinear { c, intercept, t } => fresh(Job::GammaLinear { c: *c, intercept: *intercept, t: *t }),
        Command::Critical(a) => match &a.config {
            Some(p) => from_file(p, "critical")?,
            None => fresh(Job::Critical(CriticalJob {
                times: a.times.clone(),
                dx: a.dx,
                x_cap: a.x_cap,
                samples: a.samples,
                seed: SeedSpec::new(a.seed),
            })),
        },
        Command::Experiment(a) => match &a.config {
            Some(p) => from_file(p, "experiment")?,
            None => fresh(Job::Experiment { config: ExperimentConfig::default_for(&a.id, SeedSpec::new(a.seed))? }),
        },
        Command::CheckDensity(a) => match &a.config {
            Some(p) => from_file(p, "check-density")?,
            None => fresh(Job::CheckDensity { intensity: a.density.build()?, scan: Scan::default() }),
        },
    };
    if let Some(dir) = &cli.out {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

/// The command line: parses `args` (program name first), runs the job and
/// returns the exit code. 0 on success, 1 for configuration errors and bad
/// usage, 2 for numeric failures.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = build(&cli).and_then(|cfg| {
        let workers = resolve_workers(cli.workers, cfg.workers);
        with_workers(workers, || execute(&cfg)).and_then(|r| r.map(|o| (o, cfg)))
    });
    match result {
        Ok((out, cfg)) => {
            println!("{}", out.message);
            eprintln!("wrote {} file(s) and manifest.json to {}", out.files.len(), cfg.output_dir.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
