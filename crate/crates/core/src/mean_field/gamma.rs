//! Monte Carlo evaluation of `Γ` along a time grid.
//!
//! Paths are advanced step by step. Within a step the barrier is taken
//! linear, so `f − B` is a Brownian bridge with drift between its endpoint
//! values and its maximum is drawn exactly. Draws for step `j`, batch `k`
//! come from sub-stream `j·2³² + k`, which makes every evaluation with the
//! same seed see the same paths, however the work is split across threads.

use std::ops::Range;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GammaEvalConfig, GridFunction};
use crate::closed_form::{bridge_max, drifted_max_sf};
use crate::densities::IntensitySpec;
use crate::error::Result;
use crate::numerics::{integrate, pairwise_sum};
use crate::sampling::{Purpose, SeedSpec};

/// `Γ(f)` on the grid of `f`, with the standard error at each grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub value: GridFunction,
    pub se: Vec<f64>,
}

/// Brownian paths `B` and running maxima `S`, one entry per path.
pub(crate) struct PathEngine {
    seed: SeedSpec,
    pub m: usize,
    pub batch: usize,
    pub b: Vec<f64>,
    pub s: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    t: f64,
    line: Option<Line>,
}

/// The same paths against a flat barrier held at the starting level. Its
/// expected loss is known in closed form up to one quadrature, and it moves
/// with the true loss path by path.
struct Line {
    slope: f64,
    start: f64,
    s: Vec<f64>,
}

impl PathEngine {
    pub fn new(cfg: &GammaEvalConfig, s0: f64) -> Self {
        let m = cfg.paths;
        Self {
            seed: cfg.seed.purpose(Purpose::Paths),
            m,
            batch: cfg.batch,
            b: vec![0.0; m],
            s: vec![s0; m],
            z: vec![0.0; m],
            u: vec![0.0; m],
            t: 0.0,
            line: None,
        }
    }

    /// Tracks the flat-barrier control as well.
    pub fn with_line(mut self) -> Self {
        let slope = 0.0;
        let start = self.s.first().copied().unwrap_or(0.0);
        self.line = Some(Line { slope, start, s: vec![start; self.m] });
        self
    }

    pub fn batches(&self) -> usize {
        self.m.div_ceil(self.batch)
    }

    pub fn range(&self, k: usize) -> Range<usize> {
        k * self.batch..((k + 1) * self.batch).min(self.m)
    }

    /// Fills `z` (standard normal) and `u` (uniform on `(0, 1]`) for `step`.
    pub fn draw(&mut self, step: usize) {
        let seed = self.seed;
        let batch = self.batch;
        self.z
            .par_chunks_mut(batch)
            .zip(self.u.par_chunks_mut(batch))
            .enumerate()
            .for_each(|(k, (z, u))| {
                let mut rng = seed.substream(((step as u64) << 32) | k as u64);
                for (zi, ui) in z.iter_mut().zip(u.iter_mut()) {
                    *zi = rng.sample(StandardNormal);
                    *ui = 1.0 - rng.random::<f64>();
                }
            });
    }

    /// Advances all paths over `[t0, t0 + h]` with the barrier moving
    /// linearly from `f0` to `f1`. Call [`draw`](Self::draw) first.
    pub fn advance(&mut self, h: f64, f0: f64, f1: f64) {
        let sh = h.sqrt();
        let batch = self.batch;
        if let Some(line) = &mut self.line {
            let l0 = line.start + line.slope * self.t;
            let l1 = l0 + line.slope * h;
            line.s
                .par_chunks_mut(batch)
                .zip(self.b.par_chunks(batch))
                .zip(self.z.par_chunks(batch).zip(self.u.par_chunks(batch)))
                .for_each(|((s, b), (z, u))| {
                    for i in 0..s.len() {
                        let m = bridge_max(l0 - b[i], l1 - b[i] - sh * z[i], h, u[i]);
                        if m > s[i] {
                            s[i] = m;
                        }
                    }
                });
        }
        self.b
            .par_chunks_mut(batch)
            .zip(self.s.par_chunks_mut(batch))
            .zip(self.z.par_chunks(batch).zip(self.u.par_chunks(batch)))
            .for_each(|((b, s), (z, u))| {
                for i in 0..b.len() {
                    let b1 = b[i] + sh * z[i];
                    let m = bridge_max(f0 - b[i], f1 - b1, h, u[i]);
                    if m > s[i] {
                        s[i] = m;
                    }
                    b[i] = b1;
                }
            });
        self.t += h;
    }

    /// Mean line-control loss after a step of length `h` with the current
    /// draws, leaving the paths where they are.
    pub fn line_preview(&self, g: &IntensitySpec, h: f64) -> Option<f64> {
        let line = self.line.as_ref()?;
        let sh = h.sqrt();
        let l0 = line.start + line.slope * self.t;
        let l1 = l0 + line.slope * h;
        let [sum] = self.reduce(|r| {
            let mut acc = 0.0;
            for i in r {
                let m = bridge_max(l0 - self.b[i], l1 - self.b[i] - sh * self.z[i], h, self.u[i]);
                acc += g.mass(m.max(line.s[i]));
            }
            [acc]
        });
        Some(sum / self.m as f64)
    }

    /// Exact expected line-control loss at time `t`.
    pub fn line_mean(&self, g: &IntensitySpec, t: f64) -> Option<f64> {
        self.line.as_ref().map(|l| line_loss(g, l.start, l.slope, t))
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Per-batch partial sums combined pairwise in batch order.
    pub fn reduce<const K: usize, F>(&self, f: F) -> [f64; K]
    where
        F: Fn(Range<usize>) -> [f64; K] + Sync,
    {
        let parts: Vec<[f64; K]> = (0..self.batches()).into_par_iter().map(|k| f(self.range(k))).collect();
        let mut out = [0.0; K];
        let mut col = vec![0.0; parts.len()];
        for (c, o) in out.iter_mut().enumerate() {
            for (x, p) in col.iter_mut().zip(&parts) {
                *x = p[c];
            }
            *o = pairwise_sum(&col);
        }
        out
    }

    /// Sums over paths of `G, B, G·B, B², G², C, C², G·C, B·C` with `G` the
    /// loss `G(S)` and `C` the line-control loss (zero without the line).
    pub fn moments(&self, g: &IntensitySpec) -> [f64; 9] {
        self.reduce(|r| {
            let mut acc = [0.0; 9];
            for i in r {
                let v = g.mass(self.s[i]);
                let b = self.b[i];
                let c = self.line.as_ref().map_or(0.0, |l| g.mass(l.s[i]));
                acc[0] += v;
                acc[1] += b;
                acc[2] += v * b;
                acc[3] += b * b;
                acc[4] += v * v;
                acc[5] += c;
                acc[6] += c * c;
                acc[7] += v * c;
                acc[8] += b * c;
            }
            acc
        })
    }
}

/// `E[G(start + sup_{s≤t}(W_s + slope·s))]` by quadrature over the tail of
/// the drifted maximum.
pub(crate) fn line_loss(g: &IntensitySpec, start: f64, slope: f64, t: f64) -> f64 {
    let base = g.mass(start);
    if t <= 0.0 {
        return base;
    }
    let y_max = (slope * t).max(0.0) + 12.0 * t.sqrt();
    let mut cuts = vec![0.0];
    cuts.extend(g.breakpoints(start + y_max).into_iter().map(|x| x - start).filter(|&y| y > 0.0 && y < y_max));
    if slope * t > 0.0 && slope * t < y_max {
        cuts.push(slope * t);
    }
    cuts.push(y_max);
    cuts.sort_by(f64::total_cmp);
    let f = |y: f64| g.value(start + y) * drifted_max_sf(slope, y, t);
    let tol = 1e-11 * (1.0 + y_max);
    base + cuts.windows(2).map(|w| integrate(&f, w[0], w[1], tol)).sum::<f64>()
}

/// Control-variate estimate of `E[G]`.
pub(crate) struct Summary {
    pub mean: f64,
    pub se: f64,
    /// Coefficient on the Brownian endpoint.
    pub beta_b: f64,
    /// Coefficient on the line-control loss.
    pub beta_c: f64,
}

/// Mean and standard error from [`PathEngine::moments`]. `line_mean` is the
/// exact expectation of the line control, when there is one.
pub(crate) fn summarize(mo: [f64; 9], m: usize, control_variate: bool, line_mean: Option<f64>) -> Summary {
    let n = m as f64;
    let mean_g = mo[0] / n;
    let var_g = (mo[4] / n - mean_g * mean_g).max(0.0);
    let plain = Summary { mean: mean_g, se: (var_g / n).sqrt(), beta_b: 0.0, beta_c: 0.0 };
    if !control_variate || m < 4 {
        return plain;
    }
    let mean_b = mo[1] / n;
    let mean_c = mo[5] / n;
    let vbb = (mo[3] / n - mean_b * mean_b).max(0.0);
    let vcc = (mo[6] / n - mean_c * mean_c).max(0.0);
    let vbc = mo[8] / n - mean_b * mean_c;
    let kb = mo[2] / n - mean_g * mean_b;
    let kc = mo[7] / n - mean_g * mean_c;
    if let Some(ec) = line_mean {
        let det = vbb * vcc - vbc * vbc;
        if det > 1e-12 * vbb * vcc {
            let beta_b = (vcc * kb - vbc * kc) / det;
            let beta_c = (vbb * kc - vbc * kb) / det;
            let resid = (var_g - beta_b * kb - beta_c * kc).max(0.0);
            return Summary {
                mean: mean_g - beta_b * mean_b - beta_c * (mean_c - ec),
                se: (resid / n).sqrt(),
                beta_b,
                beta_c,
            };
        }
    }
    if vbb <= 0.0 {
        return plain;
    }
    let beta_b = kb / vbb;
    let resid = (var_g - kb * kb / vbb).max(0.0);
    Summary { mean: mean_g - beta_b * mean_b, se: (resid / n).sqrt(), beta_b, beta_c: 0.0 }
}

/// Estimates `Γ(f)` at every grid point of `f`.
///
/// Without the control variate the output is non-decreasing exactly; with
/// it, a running maximum is applied.
pub fn eval_gamma(f: &GridFunction, g: &IntensitySpec, cfg: &GammaEvalConfig) -> Result<GammaEstimate> {
    cfg.validate()?;
    let grid = f.grid();
    let fv = f.values();
    let s0 = fv[0].max(0.0);
    let mut eng = PathEngine::new(cfg, s0);
    if cfg.control_variate {
        eng = eng.with_line();
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut se = Vec::with_capacity(grid.len());
    values.push(g.mass(s0));
    se.push(0.0);
    for j in 1..grid.len() {
        eng.draw(j);
        eng.advance(grid[j] - grid[j - 1], fv[j - 1], fv[j]);
        let line = eng.line_mean(g, eng.time());
        let Summary { mean, se: err, .. } = summarize(eng.moments(g), eng.m, cfg.control_variate, line);
        let prev = *values.last().unwrap();
        values.push(if cfg.control_variate { mean.max(prev) } else { mean });
        se.push(err);
    }
    // monotone by construction without the control variate; guard rounding anyway
    for j in 1..values.len() {
        if values[j] < values[j - 1] {
            values[j] = values[j - 1];
        }
    }
    Ok(GammaEstimate { value: GridFunction::new(grid.to_vec(), values)?, se })
}
