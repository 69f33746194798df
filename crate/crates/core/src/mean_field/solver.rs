//! The minimal solution of `Λ = Γ(Λ)`.
//!
//! Two methods share the path engine:
//!
//! * **Marching** (default) walks the grid once. At step `j` the paths up to
//!   `t_{j−1}` are already fixed, so `Γ(Λ)_{t_j}` only depends on the unknown
//!   value `z = Λ_{t_j}` through the last bridge maximum. The scalar map
//!   `z ↦ F(z)` is non-decreasing, and iterating it from `Λ_{t_{j−1}}` climbs
//!   to its smallest fixed point, which is the minimal solution on the grid.
//!   A barrier jump shows up as a long climb; Aitken extrapolation shortens
//!   it, with bisection as a guard against overshooting.
//! * **Picard** iterates `Λ^{k+1} = Γ(Λ^k)` over the whole grid from
//!   `Λ^0 ≡ 0`. With common random numbers and no control variate the
//!   iterates increase path by path. Slow, kept as a reference.
//!
//! With the same seed and no control variate the marching output is an exact
//! fixed point of [`eval_gamma`](super::eval_gamma) up to the inner tolerance.

use serde::{Deserialize, Serialize};

use super::density::{physical_jump_size, JumpSize, SubBarrierDensity};
use super::gamma::{eval_gamma, summarize, PathEngine, Summary};
use super::{check_grid, GammaEvalConfig, GridFunction};
use crate::densities::{check_conditions, IntensitySpec, Scan};
use crate::error::{Error, Result};
use crate::numerics::median;
use crate::particle_sim::linear_bound;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    #[default]
    Marching,
    Picard,
}

fn default_max_iter() -> usize {
    200
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveOptions {
    #[serde(default)]
    pub method: SolverMethod,
    /// Picard stopping tolerance on `sup|Λ^{k+1} − Λ^k|`; defaults to
    /// `1e−4·max(1, √T)`.
    #[serde(default)]
    pub tol: Option<f64>,
    /// Picard iterations, or inner iterations per step when marching
    /// (times 100).
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Values beyond this mark the solution as exploded. Required when the
    /// intensity has no linear bound.
    #[serde(default)]
    pub explosion_cap: Option<f64>,
    /// Record steep increases and their physical sizes.
    #[serde(default = "default_census")]
    pub census: bool,
}

fn default_census() -> bool {
    true
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { method: SolverMethod::Marching, tol: None, max_iter: 200, explosion_cap: None, census: true }
    }
}

impl SolveOptions {
    pub fn with_cap(mut self, cap: f64) -> Self {
        self.explosion_cap = Some(cap);
        self
    }

    pub fn with_method(mut self, method: SolverMethod) -> Self {
        self.method = method;
        self
    }
}

/// A steep increase of the solution between two grid points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    /// Grid time at which the increase is complete.
    pub time: f64,
    pub before: f64,
    pub after: f64,
    pub increment: f64,
    /// Jump predicted by the alive mass below the barrier just before;
    /// only available when marching.
    pub physical_size: Option<JumpSize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: SolverMethod,
    /// Evaluations of `Γ`: whole-grid for Picard, single-step for marching.
    pub iterations: usize,
    pub converged: bool,
    /// Largest remaining `|Γ(Λ) − Λ|` at a grid point (marching) or the last
    /// sup-change between iterates (Picard).
    pub residual: f64,
    /// First grid time where the cap was passed.
    pub exploded: Option<f64>,
    pub cap: f64,
    pub jumps: Vec<JumpRecord>,
    pub paths: usize,
}

/// `10·(c·T + x*)` from the linear bound, when the intensity has one.
pub fn default_cap(g: &IntensitySpec, horizon: f64) -> Option<f64> {
    let x_max = 200.0_f64.max(4.0 * horizon);
    let scan = Scan::new(x_max, (x_max / 2e4).max(0.01));
    let report = check_conditions(g, &scan);
    if !report.a2.holds {
        return None;
    }
    linear_bound(g, horizon, &scan).map(|b| 10.0 * b.z.max(1.0))
}

/// Size of the jump at time 0 forced by the initial cloud itself.
pub(crate) fn initial_jump(g: &IntensitySpec, limit: f64) -> JumpSize {
    let mut x_max = 1.0;
    loop {
        let d = SubBarrierDensity::from_intensity(g, x_max / 4096.0, x_max);
        match physical_jump_size(&d) {
            JumpSize::Finite(x) => return JumpSize::Finite(x),
            JumpSize::Explosion if x_max >= limit => return JumpSize::Explosion,
            JumpSize::Explosion => x_max *= 4.0,
        }
    }
}

/// Minimal solution on `grid` and a report.
pub fn solve_minimal(
    g: &IntensitySpec,
    grid: &[f64],
    cfg: &GammaEvalConfig,
    opts: &SolveOptions,
) -> Result<(GridFunction, SolveReport)> {
    check_grid(grid)?;
    cfg.validate()?;
    let horizon = *grid.last().unwrap();
    let cap = opts.explosion_cap.or_else(|| default_cap(g, horizon));
    let limit = cap.unwrap_or(1e6);
    let n = grid.len();
    let mut report = SolveReport {
        method: opts.method,
        iterations: 0,
        converged: true,
        residual: 0.0,
        exploded: None,
        cap: limit,
        jumps: Vec::new(),
        paths: cfg.paths,
    };
    let x0 = match initial_jump(g, limit) {
        JumpSize::Finite(x) => x,
        JumpSize::Explosion => {
            report.exploded = Some(0.0);
            return Ok((GridFunction::constant(grid.to_vec(), limit)?, report));
        }
    };
    let Some(cap) = cap else {
        return Err(Error::config(
            "this intensity has no linear bound on the barrier; set explosion_cap",
        ));
    };
    report.cap = cap;
    match opts.method {
        SolverMethod::Marching => march(g, grid, cfg, opts, x0, cap, report),
        SolverMethod::Picard => picard(g, grid, cfg, opts, cap, report, n),
    }
}

struct Scalar {
    z: f64,
    evals: usize,
    residual: f64,
    converged: bool,
    exploded: bool,
}

// Smallest fixed point of a non-decreasing map above z0.
fn climb(f: &dyn Fn(f64) -> f64, z0: f64, cap: f64, max_evals: usize) -> Scalar {
    let tol = |z: f64| 1e-10 * (1.0 + z.abs());
    let mut evals = 1;
    let f0 = f(z0);
    if f0 <= z0 + tol(z0) {
        return Scalar { z: z0, evals, residual: (f0 - z0).max(0.0), converged: true, exploded: false };
    }
    let mut prev = z0;
    let mut z = f0;
    let mut since_aitken = 0;
    let mut last_r = f64::NAN;
    loop {
        if z > cap {
            return Scalar { z, evals, residual: f64::INFINITY, converged: false, exploded: true };
        }
        let fz = f(z);
        evals += 1;
        let step = fz - z;
        if step.abs() <= tol(z) {
            return Scalar { z: fz.max(z), evals, residual: step.abs(), converged: true, exploded: false };
        }
        if evals >= max_evals {
            return Scalar { z, evals, residual: step.abs(), converged: false, exploded: false };
        }
        since_aitken += 1;
        let r = step / (z - prev);
        // extrapolate only once the contraction ratio has settled
        let settled = (r - last_r).abs() <= 0.1 * r.min(1.0 - r);
        last_r = r;
        if since_aitken >= 2 && settled && r > 0.0 && r < 1.0 {
            since_aitken = 0;
            let za = fz + step * r / (1.0 - r);
            let fa = f(za);
            evals += 1;
            if fa - za > step {
                // not geometric after all; the extrapolation may have skipped a fixed point
                prev = z;
                z = fz;
                continue;
            }
            if fa >= za {
                prev = fz;
                z = if fa > cap { fa } else { za.max(fz) };
                continue;
            }
            // overshot the fixed point: it lies in [z, za]
            let (mut lo, mut hi) = (z, za);
            while hi - lo > tol(hi) && evals < max_evals {
                let mid = 0.5 * (lo + hi);
                if f(mid) >= mid {
                    lo = mid;
                } else {
                    hi = mid;
                }
                evals += 1;
            }
            let fl = f(lo);
            evals += 1;
            return Scalar { z: lo, evals, residual: (fl - lo).abs(), converged: true, exploded: false };
        }
        prev = z;
        z = fz;
    }
}

fn march(
    g: &IntensitySpec,
    grid: &[f64],
    cfg: &GammaEvalConfig,
    opts: &SolveOptions,
    x0: f64,
    cap: f64,
    mut report: SolveReport,
) -> Result<(GridFunction, SolveReport)> {
    let n = grid.len();
    let m = cfg.paths;
    let mut eng = PathEngine::new(cfg, x0);
    if cfg.control_variate {
        eng = eng.with_line();
    }
    let mut values = vec![x0; n];
    let (mut beta_b, mut beta_c) = (0.0, 0.0);
    let mut b1 = vec![0.0; m];
    let mut q = vec![0.0; m];
    let mut increments: Vec<f64> = Vec::with_capacity(n);
    let mut physical: Vec<Option<JumpSize>> = vec![None; n];
    let max_evals = 100 * opts.max_iter.max(1);
    for j in 1..n {
        let h = grid[j] - grid[j - 1];
        let lam0 = values[j - 1];
        eng.draw(j);
        let sh = h.sqrt();
        for i in 0..m {
            b1[i] = eng.b[i] + sh * eng.z[i];
            q[i] = -2.0 * h * eng.u[i].ln();
        }
        let mut shift = 0.0;
        if beta_b != 0.0 {
            shift += beta_b * eng.reduce(|r| [r.map(|i| b1[i]).sum::<f64>()])[0] / m as f64;
        }
        if beta_c != 0.0 {
            if let (Some(c1), Some(ec)) = (eng.line_preview(g, h), eng.line_mean(g, grid[j])) {
                shift += beta_c * (c1 - ec);
            }
        }
        let eng_ref = &eng;
        let (b1r, qr) = (&b1, &q);
        let f = move |z: f64| -> f64 {
            let [sum] = eng_ref.reduce(|r| {
                let mut acc = 0.0;
                for i in r {
                    let ya = lam0 - eng_ref.b[i];
                    let yb = z - b1r[i];
                    let d = yb - ya;
                    let mx = 0.5 * (ya + yb + (d * d + qr[i]).sqrt());
                    let s = eng_ref.s[i];
                    acc += g.mass(if mx > s { mx } else { s });
                }
                [acc]
            });
            sum / m as f64 - shift
        };
        let sol = climb(&f, lam0, cap, max_evals);
        report.iterations += sol.evals;
        report.residual = report.residual.max(if sol.residual.is_finite() { sol.residual } else { 0.0 });
        report.converged &= sol.converged || sol.exploded;
        if sol.exploded {
            report.exploded = Some(grid[j]);
            for v in &mut values[j..] {
                *v = cap;
            }
            break;
        }
        let z = sol.z.max(lam0);
        let inc = z - lam0;
        if opts.census && is_candidate(&increments, inc, z) {
            let dens = SubBarrierDensity::from_paths(&eng, g, lam0, grid[j - 1], 2.0 * inc + 1e-9, 512, 20_000);
            physical[j] = Some(physical_jump_size(&dens));
        }
        increments.push(inc);
        values[j] = z;
        eng.advance(h, lam0, z);
        if cfg.control_variate {
            let line = eng.line_mean(g, grid[j]);
            let Summary { beta_b: bb, beta_c: bc, .. } = summarize(eng.moments(g), m, true, line);
            (beta_b, beta_c) = (bb, bc);
        }
    }
    if opts.census {
        report.jumps = census(grid, &values, &physical);
    }
    Ok((GridFunction::new(grid.to_vec(), values)?, report))
}

fn is_candidate(history: &[f64], inc: f64, level: f64) -> bool {
    if inc <= 1e-6 * (1.0 + level) {
        return false;
    }
    let recent = &history[history.len().saturating_sub(20)..];
    if recent.is_empty() {
        return false;
    }
    inc > 5.0 * median(recent)
}

// increments standing out against their ±10 neighbours; the first step has
// no history and is often much longer than the next (geometric grids), so
// it is left out
fn census(grid: &[f64], values: &[f64], physical: &[Option<JumpSize>]) -> Vec<JumpRecord> {
    let n = values.len();
    let inc: Vec<f64> = (1..n).map(|j| values[j] - values[j - 1]).collect();
    let mut out = Vec::new();
    for k in 1..inc.len() {
        let j = k + 1;
        if inc[k] <= 1e-6 * (1.0 + values[j]) {
            continue;
        }
        let lo = k.saturating_sub(10);
        let hi = (k + 11).min(inc.len());
        let nb: Vec<f64> = (lo..hi).filter(|&i| i != k).map(|i| inc[i]).collect();
        if nb.is_empty() || inc[k] > 5.0 * median(&nb) {
            out.push(JumpRecord {
                time: grid[j],
                before: values[j - 1],
                after: values[j],
                increment: inc[k],
                physical_size: physical[j],
            });
        }
    }
    out
}

fn picard(
    g: &IntensitySpec,
    grid: &[f64],
    cfg: &GammaEvalConfig,
    opts: &SolveOptions,
    cap: f64,
    mut report: SolveReport,
    n: usize,
) -> Result<(GridFunction, SolveReport)> {
    let tol = opts.tol.unwrap_or(1e-4 * grid[n - 1].sqrt().max(1.0));
    let mut lam = GridFunction::zero(grid.to_vec())?;
    report.converged = false;
    for k in 0..opts.max_iter {
        let mut c = *cfg;
        if !cfg.common_random_numbers {
            c.seed = c.seed.replica(c.seed.replica.wrapping_add(k as u64 + 1));
        }
        let est = eval_gamma(&lam, g, &c)?;
        report.iterations += 1;
        let mut vals = est.value.values().to_vec();
        if let Some(j) = vals.iter().position(|&v| v > cap) {
            report.exploded = Some(grid[j]);
            for v in &mut vals[j..] {
                *v = cap;
            }
        }
        let next = GridFunction::new(grid.to_vec(), vals)?;
        let diff = next.sup_distance(&lam);
        lam = next;
        report.residual = diff;
        if report.exploded.is_some() {
            break;
        }
        if diff < tol {
            report.converged = true;
            break;
        }
    }
    if opts.census {
        report.jumps = census(grid, lam.values(), &vec![None; n]);
    }
    Ok((lam, report))
}
