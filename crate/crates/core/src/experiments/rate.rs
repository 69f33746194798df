use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{defaults, replica_seed, Check, ExperimentSummary, Record};
use crate::densities::{check_conditions, IntensitySpec, Scan};
use crate::error::{Error, Result};
use crate::mean_field::{geometric_grid, solve_minimal, GammaEvalConfig, GridFunction, SolveOptions};
use crate::numerics::{linear_fit, median};
use crate::particle_sim::{run, EventLog, Scheme, SimConfig};
use crate::sampling::SeedSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateThresholds {
    pub median_ratio_max: f64,
    pub tail_levels: Vec<f64>,
    pub tail_slope_max: f64,
}

/// The mean-field reference: marching solve on a geometric grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSolve {
    pub paths: usize,
    pub first: f64,
    pub per_decade: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub intensity: IntensitySpec,
    pub ns: Vec<f64>,
    pub horizon: f64,
    pub replicas: usize,
    pub seed: SeedSpec,
    #[serde(default)]
    pub scheme: Scheme,
    pub reference: ReferenceSolve,
    #[serde(default = "default_thresholds")]
    pub thresholds: RateThresholds,
}

fn default_thresholds() -> RateThresholds {
    defaults().rate.clone()
}

impl RateConfig {
    pub fn new(seed: SeedSpec) -> Self {
        Self {
            intensity: IntensitySpec::constant(0.5).expect("valid"),
            ns: vec![1e3, 1e4, 1e5],
            horizon: 1.0,
            replicas: 100,
            seed,
            scheme: Scheme::default(),
            // ten paths per particle of the largest system
            reference: ReferenceSolve { paths: 1_000_000, first: 1e-8, per_decade: 40 },
            thresholds: default_thresholds(),
        }
    }
}

/// `sup_{t ≤ T} |Λ^N_t − Λ_t|`. The particle barrier is a step function and
/// `Λ` is non-decreasing, so the sup over each flat stretch sits at one of
/// its ends.
pub fn sup_error(log: &EventLog, lam: &GridFunction, horizon: f64) -> f64 {
    let path = log.path();
    let mut level = path.initial;
    let mut worst = (level - lam.interp(0.0)).abs();
    for (&t, &v) in path.times.iter().zip(&path.values) {
        if t > horizon {
            break;
        }
        let at = lam.interp(t);
        worst = worst.max((level - at).abs()).max((v - at).abs());
        level = v;
    }
    worst.max((level - lam.interp(horizon)).abs())
}

pub fn exp_rate(cfg: &RateConfig) -> Result<ExperimentSummary> {
    let report = check_conditions(&cfg.intensity, &Scan::new(200.0, 0.01));
    if !report.w.holds {
        return Err(Error::config("the √N rate study needs weak feedback, which this intensity lacks"));
    }
    if cfg.ns.is_empty() || cfg.ns.iter().any(|&n| !(n >= 1.0)) {
        return Err(Error::config("rate study needs N ≥ 1"));
    }
    let mut out = ExperimentSummary::new("rate", cfg, cfg.seed, cfg.replicas);
    let th = &cfg.thresholds;
    let ratio_rule = format!("max/min median ≤ {}", th.median_ratio_max);
    let tail_rule = format!("slope of log P(err > y) on y² ≤ {}", th.tail_slope_max);
    if cfg.replicas == 0 {
        out.checks.push(Check::undecided("median_ratio", ratio_rule));
        out.checks.push(Check::undecided("tail_slope", tail_rule));
        return Ok(out.conclude());
    }
    let grid = geometric_grid(cfg.reference.first, cfg.horizon, cfg.reference.per_decade)?;
    let gcfg = GammaEvalConfig::new(cfg.reference.paths, cfg.seed).with_control_variate(true);
    let (lam, rep) = solve_minimal(&cfg.intensity, &grid, &gcfg, &SolveOptions::default())?;
    if rep.exploded.is_some() {
        return Err(Error::Numeric("mean-field reference exploded".into()));
    }
    out.stat("reference_final", *lam.values().last().unwrap());
    let mut medians = Vec::new();
    let mut pooled = Vec::new();
    for (gi, &n) in cfg.ns.iter().enumerate() {
        let errs = (0..cfg.replicas as u64)
            .into_par_iter()
            .map(|r| {
                let sim = SimConfig::n_system(cfg.intensity.clone(), n, cfg.horizon, replica_seed(cfg.seed, gi, r))
                    .with_scheme(cfg.scheme);
                Ok(n.sqrt() * sup_error(&run(&sim)?, &lam, cfg.horizon))
            })
            .collect::<Result<Vec<f64>>>()?;
        let label = format!("N={n}");
        let med = median(&errs);
        out.stat(format!("median[{label}]"), med);
        medians.push(med);
        pooled.extend_from_slice(&errs);
        out.records.extend(errs.iter().enumerate().map(|(r, &v)| Record { group: label.clone(), replica: r as u64, value: v }));
    }
    let hi = medians.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = medians.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = hi / lo;
    out.stat("median_ratio", ratio);
    out.checks.push(Check::new("median_ratio", ratio, ratio_rule, ratio <= th.median_ratio_max));

    let total = pooled.len() as f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &y in &th.tail_levels {
        let frac = pooled.iter().filter(|&&e| e > y).count() as f64 / total;
        out.stat(format!("tail[y={y}]"), frac);
        if frac > 0.0 {
            xs.push(y * y);
            ys.push(frac.ln());
        }
    }
    if xs.len() >= 3 {
        let (slope, se, _) = linear_fit(&xs, &ys);
        out.stat("tail_slope", slope);
        out.stat("tail_slope_se", se);
        out.checks.push(Check::new("tail_slope", slope, tail_rule, slope <= th.tail_slope_max));
    } else {
        out.checks.push(Check::undecided("tail_slope", tail_rule));
    }
    Ok(out.conclude())
}
