use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{num, OutputDir, RunConfig};
use crate::closed_form::{gamma_linear, k_alpha};
use crate::critical::sample_r;
use crate::densities::{check_conditions, IntensitySpec, Scan};
use crate::error::{Error, Result};
use crate::experiments::{run_experiment, ExperimentConfig, Outcome};
use crate::mean_field::{
    asymptotic_speed, geometric_grid, laplace_residual, solve_minimal, uniform_grid, GammaEvalConfig, JumpSize,
    LaplaceMode, SolveOptions,
};
use crate::numerics::mean_se;
use crate::particle_sim::{run, SimConfig, Terminal};
use crate::sampling::{Purpose, SeedSpec};

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateJob {
    pub system: SimConfig,
    #[serde(default = "one")]
    pub replicas: usize,
    /// An exploded replica is a numeric failure unless this is set.
    #[serde(default)]
    pub allow_explosion: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Uniform { horizon: f64, dt: f64 },
    Geometric { first: f64, horizon: f64, per_decade: usize },
    Explicit { times: Vec<f64> },
}

impl GridSpec {
    pub fn build(&self) -> Result<Vec<f64>> {
        match self {
            GridSpec::Uniform { horizon, dt } => uniform_grid(*horizon, *dt),
            GridSpec::Geometric { first, horizon, per_decade } => geometric_grid(*first, *horizon, *per_decade),
            GridSpec::Explicit { times } => {
                crate::mean_field::GridFunction::zero(times.clone())?;
                Ok(times.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveJob {
    pub intensity: IntensitySpec,
    pub grid: GridSpec,
    pub gamma: GammaEvalConfig,
    #[serde(default)]
    pub options: SolveOptions,
    #[serde(default)]
    pub allow_explosion: bool,
    /// `λ` values for the infinite-horizon Laplace residual.
    #[serde(default)]
    pub laplace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalJob {
    pub times: Vec<f64>,
    pub dx: f64,
    /// The space walk stops here; later `R_t` read as `inf`.
    pub x_cap: f64,
    pub samples: usize,
    pub seed: SeedSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Job {
    Simulate(SimulateJob),
    Solve(SolveJob),
    Critical(CriticalJob),
    Experiment { config: ExperimentConfig },
    Kalpha { a: f64 },
    GammaLinear { c: f64, intercept: f64, t: f64 },
    CheckDensity {
        intensity: IntensitySpec,
        #[serde(default)]
        scan: Scan,
    },
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::Simulate(_) => "simulate",
            Job::Solve(_) => "solve",
            Job::Critical(_) => "critical",
            Job::Experiment { .. } => "experiment",
            Job::Kalpha { .. } => "kalpha",
            Job::GammaLinear { .. } => "gamma-linear",
            Job::CheckDensity { .. } => "check-density",
        }
    }

    pub fn seed(&self) -> Option<SeedSpec> {
        match self {
            Job::Simulate(j) => Some(j.system.seed),
            Job::Solve(j) => Some(j.gamma.seed),
            Job::Critical(j) => Some(j.seed),
            Job::Experiment { config } => Some(match config {
                ExperimentConfig::Similarity(c) => c.seed,
                ExperimentConfig::Rate(c) => c.seed,
                ExperimentConfig::Critical(c) => c.seed,
                ExperimentConfig::Gap(c) => c.seed,
                ExperimentConfig::Polynomial(c) => c.seed,
            }),
            _ => None,
        }
    }
}

/// What a run produced: the files written and a line for the terminal.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub files: Vec<String>,
    pub message: String,
}

/// Runs the job, writes its outputs and manifest. Outputs are written even
/// when the run ends in a numeric failure, which is then returned as the
/// error.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput> {
    let mut out = OutputDir::create(cfg, cfg.job.seed())?;
    let (message, failure) = match &cfg.job {
        Job::Simulate(j) => simulate(j, &mut out)?,
        Job::Solve(j) => solve(j, &mut out)?,
        Job::Critical(j) => critical(j, &mut out)?,
        Job::Experiment { config } => {
            let s = run_experiment(config)?;
            out.json("summary.json", &s)?;
            out.csv(
                "records.csv",
                &["group", "replica", "value"],
                s.records.iter().map(|r| [r.group.clone(), r.replica.to_string(), num(r.value)]),
            )?;
            let mut msg = format!("{}: {:?}", s.id, s.outcome);
            for c in &s.checks {
                msg.push_str(&format!("\n  {} = {:?} ({}) {:?}", c.name, c.value, c.rule, c.passed));
            }
            if s.outcome == Outcome::Fail {
                msg.push_str("\n  verdict: fail");
            }
            (msg, None)
        }
        Job::Kalpha { a } => {
            let k = k_alpha(*a)?;
            out.json("result.json", &serde_json::json!({ "a": a, "k_alpha": k }))?;
            (format!("{k:.12}"), None)
        }
        Job::GammaLinear { c, intercept, t } => {
            let v = gamma_linear(*c, *intercept, *t);
            if !v.is_finite() {
                return Err(Error::domain("gamma_linear needs finite inputs and t ≥ 0"));
            }
            out.json("result.json", &serde_json::json!({ "c": c, "intercept": intercept, "t": t, "gamma": v }))?;
            (format!("{v:.12}"), None)
        }
        Job::CheckDensity { intensity, scan } => {
            let report = check_conditions(intensity, scan);
            let speed = asymptotic_speed(intensity);
            out.json("report.json", &serde_json::json!({ "conditions": report, "speed": speed }))?;
            let msg = format!(
                "A1 {} | A2 {} | A3 {:?} | A4 {:?} | W {} | blow-up {}",
                mark(report.a1.holds),
                mark(report.a2.holds),
                report.a3.verdict,
                report.a4.verdict,
                mark(report.w.holds),
                report.blowup.as_ref().map_or("none".to_string(), |b| format!("at x = {}", b.x)),
            );
            (msg, None)
        }
    };
    let files = out.finish(cfg)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(RunOutput { files, message }),
    }
}

fn mark(b: bool) -> &'static str {
    if b {
        "holds"
    } else {
        "fails"
    }
}

type Done = (String, Option<Error>);

fn simulate(j: &SimulateJob, out: &mut OutputDir) -> Result<Done> {
    j.system.validate()?;
    let base = j.system.seed;
    let logs = (0..j.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut sys = j.system.clone();
            sys.seed = base.replica(base.replica + r);
            run(&sys)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut events = Vec::new();
    let mut replicas = Vec::new();
    let mut finals = Vec::new();
    let mut exploded = 0;
    for (r, log) in logs.iter().enumerate() {
        for (i, t, before, k, after) in log.rows() {
            events.push([r.to_string(), i.to_string(), num(t), num(before), k.to_string(), num(after)]);
        }
        let (status, when) = match log.terminal {
            Terminal::Completed => ("completed", String::new()),
            Terminal::Exploded { time } => {
                exploded += 1;
                ("exploded", num(time))
            }
        };
        let d = &log.diagnostics;
        replicas.push([
            r.to_string(),
            status.to_string(),
            num(log.final_barrier()),
            when,
            d.particles.to_string(),
            d.extensions.to_string(),
            d.truncation_violations.to_string(),
            d.alive_at_end.to_string(),
        ]);
        finals.push(log.final_barrier());
    }
    out.csv("events.csv", &["replica", "event", "time", "barrier_before", "absorbed", "barrier_after"], events)?;
    out.csv(
        "replicas.csv",
        &["replica", "status", "final_barrier", "explosion_time", "particles", "extensions", "truncation_violations", "alive_at_end"],
        replicas,
    )?;
    let (mean, se) = mean_se(&finals);
    out.json(
        "summary.json",
        &serde_json::json!({ "replicas": j.replicas, "exploded": exploded, "final_barrier_mean": mean, "final_barrier_se": se }),
    )?;
    let msg = format!("{} replicas, final barrier {mean:.6} ± {se:.6}, {exploded} exploded", j.replicas);
    let failure = (exploded > 0 && !j.allow_explosion)
        .then(|| Error::Numeric(format!("{exploded} replica(s) exploded; set allow_explosion to accept this")));
    Ok((msg, failure))
}

fn solve(j: &SolveJob, out: &mut OutputDir) -> Result<Done> {
    let grid = j.grid.build()?;
    let (lam, rep) = solve_minimal(&j.intensity, &grid, &j.gamma, &j.options)?;
    out.csv("barrier.csv", &["t", "barrier"], lam.rows().map(|(t, v)| [num(t), num(v)]))?;
    out.csv(
        "jumps.csv",
        &["time", "before", "after", "increment", "physical_size"],
        rep.jumps.iter().map(|k| {
            let phys = match k.physical_size {
                Some(JumpSize::Finite(x)) => num(x),
                Some(JumpSize::Explosion) => "explosion".into(),
                None => String::new(),
            };
            [num(k.time), num(k.before), num(k.after), num(k.increment), phys]
        }),
    )?;
    let laplace: Vec<serde_json::Value> = j
        .laplace
        .iter()
        .map(|&l| match laplace_residual(&lam, &j.intensity, l, &LaplaceMode::InfiniteHorizon) {
            Ok(r) => serde_json::to_value(r).expect("serializable"),
            Err(e) => serde_json::json!({ "lambda": l, "error": e.to_string() }),
        })
        .collect();
    out.json(
        "summary.json",
        &serde_json::json!({ "report": rep, "speed": asymptotic_speed(&j.intensity), "laplace": laplace }),
    )?;
    let last = *lam.values().last().unwrap();
    let msg = format!(
        "Λ({}) = {last:.6}, {} evaluations, {} jumps{}",
        lam.horizon(),
        rep.iterations,
        rep.jumps.len(),
        rep.exploded.map_or(String::new(), |t| format!(", exploded at {t}"))
    );
    let failure = match rep.exploded {
        Some(t) if !j.allow_explosion => {
            Some(Error::Numeric(format!("solution exploded at t = {t}; set allow_explosion to accept this")))
        }
        _ => None,
    };
    Ok((msg, failure))
}

fn critical(j: &CriticalJob, out: &mut OutputDir) -> Result<Done> {
    if j.times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::config("critical: times must be sorted"));
    }
    let base = j.seed.purpose(Purpose::Oracle);
    let rows = (0..j.samples as u64)
        .into_par_iter()
        .map(|i| sample_r(&j.times, j.dx, j.x_cap, &base.replica(base.replica + i)))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = Vec::new();
    for (i, rs) in rows.iter().enumerate() {
        for (t, r) in j.times.iter().zip(rs) {
            csv.push([i.to_string(), num(*t), num(*r)]);
        }
    }
    out.csv("r_samples.csv", &["replica", "t", "r"], csv)?;
    let mut per_time = Vec::new();
    for (k, &t) in j.times.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        let censored = col.iter().filter(|x| x.is_infinite()).count();
        per_time.push(serde_json::json!({
            "t": t,
            "median": crate::numerics::median(&col),
            "censored": censored,
        }));
    }
    out.json("summary.json", &per_time)?;
    Ok((format!("{} samples of R at {} times", j.samples, j.times.len()), None))
}
