use serde::{Deserialize, Serialize};

use super::{defaults, Check, ExperimentSummary, Record};
use crate::densities::IntensitySpec;
use crate::error::Result;
use crate::mean_field::{geometric_grid, solve_minimal, GammaEvalConfig, SolveOptions};
use crate::numerics::linear_fit;
use crate::sampling::SeedSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialThresholds {
    pub min_slope: f64,
    pub min_level: f64,
}

/// Heavy-tailed density: growth exponent of the minimal solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialConfig {
    pub beta: f64,
    pub horizon: f64,
    pub paths: usize,
    pub first: f64,
    pub per_decade: usize,
    pub cap: f64,
    pub seed: SeedSpec,
    #[serde(default = "default_thresholds")]
    pub thresholds: PolynomialThresholds,
}

fn default_thresholds() -> PolynomialThresholds {
    defaults().polynomial.clone()
}

impl PolynomialConfig {
    pub fn new(seed: SeedSpec) -> Self {
        Self {
            beta: 0.5,
            horizon: 200.0,
            paths: 20_000,
            first: 1e-3,
            per_decade: 20,
            cap: 1e15,
            seed,
            thresholds: default_thresholds(),
        }
    }
}

pub fn exp_polynomial(cfg: &PolynomialConfig) -> Result<ExperimentSummary> {
    let g = IntensitySpec::heavy_tail(cfg.beta)?;
    let mut out = ExperimentSummary::new("polynomial", cfg, cfg.seed, 1);
    let th = &cfg.thresholds;
    let rule = format!("> {} over t ∈ [T/2, T]", th.min_slope);
    let grid = geometric_grid(cfg.first, cfg.horizon, cfg.per_decade)?;
    let gcfg = GammaEvalConfig::new(cfg.paths, cfg.seed).with_control_variate(true);
    let (lam, rep) = solve_minimal(&g, &grid, &gcfg, &SolveOptions::default().with_cap(cfg.cap))?;
    out.stat("final_barrier", *lam.values().last().unwrap());
    if let Some(t) = rep.exploded {
        out.stat("exploded_at", t);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = lam
        .rows()
        .filter(|&(t, _)| t >= 0.5 * cfg.horizon)
        .map(|(t, v)| (t.ln(), v.ln()))
        .unzip();
    for (k, (t, v)) in lam.rows().enumerate() {
        out.records.push(Record { group: "time".into(), replica: k as u64, value: t });
        out.records.push(Record { group: "barrier".into(), replica: k as u64, value: v });
    }
    let start = lam.interp(0.5 * cfg.horizon);
    out.stat("level_at_half", start);
    if xs.len() < 3 || start < th.min_level || rep.exploded.is_some() {
        out.checks.push(Check::undecided("growth_slope", rule));
        return Ok(out.conclude());
    }
    let (slope, se, _) = linear_fit(&xs, &ys);
    out.stat("growth_slope", slope);
    out.stat("growth_slope_se", se);
    out.checks.push(Check::new("growth_slope", slope, rule, slope > th.min_slope));
    Ok(out.conclude())
}
