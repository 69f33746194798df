use serde::{Deserialize, Serialize};

use super::{defaults, Check, ExperimentSummary, Record};
use crate::densities::{gap_edge, IntensitySpec};
use crate::error::{Error, Result};
use crate::mean_field::{geometric_grid, solve_minimal, GammaEvalConfig, JumpRecord, JumpSize, SolveOptions};
use crate::sampling::SeedSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapThresholds {
    pub min_jumps: usize,
    pub control_max_jumps: usize,
}

/// Minimal solution for the gap density on a geometric grid, plus a
/// constant-density control on its own shorter grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    pub ratio: f64,
    pub alpha: f64,
    pub paths: usize,
    pub first: f64,
    pub horizon: f64,
    pub per_decade: usize,
    pub cap: f64,
    pub seed: SeedSpec,
    /// Density of the control run.
    pub control_density: f64,
    pub control_horizon: f64,
    #[serde(default = "default_thresholds")]
    pub thresholds: GapThresholds,
}

fn default_thresholds() -> GapThresholds {
    defaults().gap.clone()
}

impl GapConfig {
    pub fn new(seed: SeedSpec) -> Self {
        Self {
            ratio: 10.0,
            alpha: 0.25,
            paths: 20_000,
            first: 1e-4,
            // long enough for the barrier to cross the empty band ending at edge 4
            horizon: 1.2e8,
            per_decade: 100,
            cap: 1e9,
            seed,
            control_density: 0.5,
            control_horizon: 100.0,
            thresholds: default_thresholds(),
        }
    }
}

/// Index `i` of the empty band `[x̂_{2i−1}, x̂_{2i}]` containing `x`, if any.
pub fn empty_band(ratio: f64, x: f64) -> Option<i32> {
    let mut i = 0;
    loop {
        let (lo, hi) = (gap_edge(ratio, 2 * i - 1), gap_edge(ratio, 2 * i));
        if x < lo {
            return None;
        }
        if x <= hi {
            return Some(i);
        }
        i += 1;
    }
}

fn sweeps_mass(j: &JumpRecord) -> bool {
    match j.physical_size {
        Some(JumpSize::Finite(x)) => x > 0.0,
        Some(JumpSize::Explosion) => true,
        None => false,
    }
}

pub fn exp_gap_density(cfg: &GapConfig) -> Result<ExperimentSummary> {
    let g = IntensitySpec::gap_density(cfg.ratio, cfg.alpha)?;
    if !(cfg.horizon > cfg.first && cfg.control_horizon > cfg.first) {
        return Err(Error::config("gap study horizons must exceed the first grid time"));
    }
    let mut out = ExperimentSummary::new("gap", cfg, cfg.seed, 1);
    let th = &cfg.thresholds;
    let gcfg = GammaEvalConfig::new(cfg.paths, cfg.seed).with_control_variate(true);
    let grid = geometric_grid(cfg.first, cfg.horizon, cfg.per_decade)?;
    let (lam, rep) = solve_minimal(&g, &grid, &gcfg, &SolveOptions::default().with_cap(cfg.cap))?;
    let reach = *lam.values().last().unwrap();
    out.stat("final_barrier", reach);
    out.stat("census_entries", rep.jumps.len() as f64);
    // a jump counts when the sub-barrier cloud gives it positive physical
    // size and it starts inside an empty band
    let mut bands = Vec::new();
    for (k, j) in rep.jumps.iter().filter(|j| sweeps_mass(j)).enumerate() {
        let band = empty_band(cfg.ratio, j.before);
        out.records.push(Record { group: "jump_time".into(), replica: k as u64, value: j.time });
        out.records.push(Record { group: "jump_from".into(), replica: k as u64, value: j.before });
        out.records.push(Record { group: "jump_to".into(), replica: k as u64, value: j.after });
        bands.push(band);
    }
    let in_bands = bands.iter().filter(|b| b.is_some()).count();
    let distinct = {
        let mut b: Vec<i32> = bands.iter().flatten().copied().collect();
        b.dedup();
        b.len()
    };
    out.stat("jumps", bands.len() as f64);
    out.stat("jumps_in_empty_bands", in_bands as f64);
    out.stat("distinct_bands", distinct as f64);
    if reach < gap_edge(cfg.ratio, 4) {
        out.checks.push(Check::undecided("jumps_in_bands", format!("≥ {} (barrier never reached edge 4)", th.min_jumps)));
    } else {
        let ok = in_bands == bands.len() && distinct >= th.min_jumps;
        out.checks.push(Check::new(
            "jumps_in_bands",
            distinct as f64,
            format!("≥ {} jumps in distinct empty bands, none elsewhere", th.min_jumps),
            ok,
        ));
    }

    let control = IntensitySpec::constant(cfg.control_density)?;
    let cgrid = geometric_grid(cfg.first, cfg.control_horizon, cfg.per_decade)?;
    let (_, crep) = solve_minimal(&control, &cgrid, &gcfg, &SolveOptions::default())?;
    let cj = crep.jumps.len();
    out.stat("control_census_entries", cj as f64);
    out.checks.push(Check::new(
        "control_jumps",
        cj as f64,
        format!("≤ {}", th.control_max_jumps),
        cj <= th.control_max_jumps,
    ));
    Ok(out.conclude())
}
