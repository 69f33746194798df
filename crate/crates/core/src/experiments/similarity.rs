use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{defaults, replica_seed, Check, ExperimentSummary, Record};
use crate::closed_form::k_alpha;
use crate::densities::IntensitySpec;
use crate::error::{Error, Result};
use crate::numerics::{linear_fit, median};
use crate::particle_sim::{run, rescale_to_xi, Scheme, SimConfig};
use crate::sampling::SeedSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilarityThresholds {
    pub median_rel_tol: f64,
    pub slope_min: f64,
    pub slope_max: f64,
}

/// Constant density `a` with unit jumps, read at times `times`.
///
/// Each run is the `N`-system with `N = √T/a` up to time 1, which is the
/// same law as `ξ` up to `T` after rescaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilarityConfig {
    pub a: f64,
    pub times: Vec<f64>,
    pub replicas: usize,
    pub seed: SeedSpec,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_thresholds")]
    pub thresholds: SimilarityThresholds,
}

fn default_thresholds() -> SimilarityThresholds {
    defaults().similarity.clone()
}

impl SimilarityConfig {
    pub fn new(seed: SeedSpec) -> Self {
        Self {
            a: 0.5,
            times: vec![1e2, 1e3, 1e4],
            replicas: 100,
            seed,
            scheme: Scheme::default(),
            thresholds: default_thresholds(),
        }
    }
}

pub fn exp_similarity(cfg: &SimilarityConfig) -> Result<ExperimentSummary> {
    if !(cfg.a > 0.0 && cfg.a < 1.0) {
        return Err(Error::config(format!("similarity needs a in (0, 1), got {}", cfg.a)));
    }
    if cfg.times.is_empty() || cfg.times.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::config("similarity needs positive times"));
    }
    let k = k_alpha(cfg.a)?;
    let mut out = ExperimentSummary::new("similarity", cfg, cfg.seed, cfg.replicas);
    out.stat("k_alpha", k);
    let th = &cfg.thresholds;
    if cfg.replicas == 0 {
        out.checks.push(Check::undecided("median_rel_error", format!("≤ {}", th.median_rel_tol)));
        return Ok(out.conclude());
    }
    let g = IntensitySpec::constant(cfg.a)?;
    let mut spreads = Vec::new();
    let mut last_median = f64::NAN;
    for (gi, &t) in cfg.times.iter().enumerate() {
        let n = t.sqrt() / cfg.a;
        let vals = (0..cfg.replicas as u64)
            .into_par_iter()
            .map(|r| {
                let sim = SimConfig::n_system(g.clone(), n, 1.0, replica_seed(cfg.seed, gi, r)).with_scheme(cfg.scheme);
                let log = run(&sim)?;
                Ok(rescale_to_xi(&log, n, cfg.a).value_at(t) / t.sqrt())
            })
            .collect::<Result<Vec<f64>>>()?;
        let label = format!("T={t}");
        let med = median(&vals);
        let dev: Vec<f64> = vals.iter().map(|v| (v - k).abs()).collect();
        let spread = median(&dev);
        out.stat(format!("median[{label}]"), med);
        out.stat(format!("spread[{label}]"), spread);
        spreads.push((t.ln(), spread.ln()));
        out.records.extend(vals.iter().enumerate().map(|(r, &v)| Record { group: label.clone(), replica: r as u64, value: v }));
        last_median = med;
    }
    let rel = (last_median / k - 1.0).abs();
    out.checks.push(Check::new(
        "median_rel_error",
        rel,
        format!("≤ {} at the largest T", th.median_rel_tol),
        rel <= th.median_rel_tol,
    ));
    let rule = format!("in [{}, {}]", th.slope_min, th.slope_max);
    if spreads.len() >= 2 && spreads.iter().all(|p| p.1.is_finite()) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = spreads.into_iter().unzip();
        let (slope, se, _) = linear_fit(&xs, &ys);
        out.stat("spread_slope", slope);
        out.stat("spread_slope_se", se);
        out.checks.push(Check::new("spread_slope", slope, rule, slope >= th.slope_min && slope <= th.slope_max));
    } else {
        out.checks.push(Check::undecided("spread_slope", rule));
    }
    Ok(out.conclude())
}
