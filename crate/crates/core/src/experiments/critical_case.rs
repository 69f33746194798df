use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{defaults, ks_distance, replica_seed, Check, ExperimentSummary, Record};
use crate::critical::{critical_rescale, sample_r, unit_density};
use crate::error::{Error, Result};
use crate::numerics::quantile;
use crate::particle_sim::{run, Scheme, SimConfig, Terminal};
use crate::sampling::{Purpose, SeedSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalThresholds {
    pub ks_noise: f64,
    pub final_ks: f64,
}

/// Unit density, jump `1/N`, read at time `t`.
///
/// Both laws have a heavy upper tail, so both sides are censored at
/// `censor`: particle runs stop once the barrier passes `censor·N^{1/3}`,
/// the space walk once it passes `censor`, and either reads as `+∞`. The KS
/// distance is unaffected below the censoring level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalConfig {
    pub ns: Vec<f64>,
    pub replicas: usize,
    pub r_samples: usize,
    pub dx: f64,
    pub t: f64,
    pub censor: f64,
    pub seed: SeedSpec,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_thresholds")]
    pub thresholds: CriticalThresholds,
}

fn default_thresholds() -> CriticalThresholds {
    defaults().critical.clone()
}

impl CriticalConfig {
    pub fn new(seed: SeedSpec) -> Self {
        Self {
            ns: vec![250.0, 1e3, 4e3],
            replicas: 300,
            r_samples: 10_000,
            dx: 1e-4,
            t: 1.0,
            censor: 50.0,
            seed,
            scheme: Scheme::default(),
            thresholds: default_thresholds(),
        }
    }
}

/// `R_t` samples, censored at `x_cap`.
pub fn r_samples(t: f64, dx: f64, x_cap: f64, count: usize, seed: SeedSpec) -> Result<Vec<f64>> {
    let base = seed.purpose(Purpose::Oracle);
    (0..count as u64)
        .into_par_iter()
        .map(|i| Ok(sample_r(&[t], dx, x_cap, &base.replica(i))?[0]))
        .collect()
}

/// `Λ^N_t/N^{1/3}` for one replica, `+∞` past the censoring level.
pub fn rescaled_barrier(n: f64, t: f64, censor: f64, scheme: Scheme, seed: SeedSpec) -> Result<f64> {
    let sim = SimConfig::n_system(unit_density(), n, t, seed).with_scheme(scheme).with_cap(censor * n.cbrt());
    let log = run(&sim)?;
    if matches!(log.terminal, Terminal::Exploded { .. }) {
        return Ok(f64::INFINITY);
    }
    let v = critical_rescale(&log, n, &[t])?[0];
    Ok(if v > censor { f64::INFINITY } else { v })
}

pub fn exp_critical(cfg: &CriticalConfig) -> Result<ExperimentSummary> {
    if cfg.ns.is_empty() || cfg.ns.iter().any(|&n| !(n >= 1.0)) {
        return Err(Error::config("critical study needs N ≥ 1"));
    }
    if !(cfg.t > 0.0 && cfg.censor > 0.0 && cfg.dx > 0.0) {
        return Err(Error::config("critical study needs t, censor and dx positive"));
    }
    let mut out = ExperimentSummary::new("critical", cfg, cfg.seed, cfg.replicas);
    let th = &cfg.thresholds;
    let step_rule = format!("each rise ≤ {}", th.ks_noise);
    let final_rule = format!("< {}", th.final_ks);
    if cfg.replicas == 0 || cfg.r_samples == 0 {
        out.checks.push(Check::undecided("ks_steps", step_rule));
        out.checks.push(Check::undecided("final_ks", final_rule));
        return Ok(out.conclude());
    }
    let oracle = r_samples(cfg.t, cfg.dx, cfg.censor, cfg.r_samples, cfg.seed)?;
    describe(&mut out, "R", &oracle);
    let mut ks = Vec::new();
    for (gi, &n) in cfg.ns.iter().enumerate() {
        let vals = (0..cfg.replicas as u64)
            .into_par_iter()
            .map(|r| rescaled_barrier(n, cfg.t, cfg.censor, cfg.scheme, replica_seed(cfg.seed, gi, r)))
            .collect::<Result<Vec<f64>>>()?;
        let label = format!("N={n}");
        let d = ks_distance(&vals, &oracle)?;
        out.stat(format!("ks[{label}]"), d);
        describe(&mut out, &label, &vals);
        ks.push(d);
        out.records.extend(vals.iter().enumerate().map(|(r, &v)| Record { group: label.clone(), replica: r as u64, value: v }));
    }
    let worst_rise = ks.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    if ks.len() >= 2 {
        out.stat("ks_worst_rise", worst_rise);
        out.checks.push(Check::new("ks_steps", worst_rise, step_rule, worst_rise <= th.ks_noise));
    } else {
        out.checks.push(Check::undecided("ks_steps", step_rule));
    }
    let last = *ks.last().unwrap();
    out.checks.push(Check::new("final_ks", last, final_rule, last < th.final_ks));
    Ok(out.conclude())
}

fn describe(out: &mut ExperimentSummary, label: &str, xs: &[f64]) {
    for (name, p) in [("q25", 0.25), ("median", 0.5), ("q75", 0.75)] {
        out.stat(format!("{name}[{label}]"), quantile(xs, p));
    }
    let censored = xs.iter().filter(|x| x.is_infinite()).count() as f64 / xs.len() as f64;
    out.stat(format!("censored[{label}]"), censored);
}
