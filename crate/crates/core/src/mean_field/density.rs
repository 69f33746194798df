//! Mass of the alive cloud just below the barrier, and the physical jump it
//! implies: the barrier jumps to the first `x` at which the alive mass
//! between the old and new barrier falls short of the jump.

use serde::{Deserialize, Serialize};

use super::gamma::PathEngine;
use crate::closed_form::norm_cdf;
use crate::densities::IntensitySpec;
use crate::error::{Error, Result};

/// Alive mass at distance `[0, x]` above the barrier at time `t−`, stored as
/// its cumulative `C(k·dx)` for `k = 0..`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubBarrierDensity {
    pub dx: f64,
    /// `cumulative[0] = 0`; non-decreasing.
    pub cumulative: Vec<f64>,
    /// Resolution of the underlying estimate (grid spacing for exact input).
    pub bandwidth: f64,
    pub time: f64,
}

impl SubBarrierDensity {
    /// From per-cell densities on `[k·dx, (k+1)·dx)`.
    pub fn from_bins(dx: f64, density: &[f64], time: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::domain("bin width must be positive"));
        }
        if density.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::domain("densities must be non-negative"));
        }
        let mut cumulative = Vec::with_capacity(density.len() + 1);
        let mut c = 0.0;
        cumulative.push(0.0);
        for d in density {
            c += d * dx;
            cumulative.push(c);
        }
        Ok(Self { dx, cumulative, bandwidth: dx, time })
    }

    /// The initial cloud itself (`t = 0`, barrier at 0): `C = G`.
    pub fn from_intensity(g: &IntensitySpec, dx: f64, x_max: f64) -> Self {
        let n = (x_max / dx).ceil() as usize;
        let cumulative = (0..=n).map(|k| g.mass(k as f64 * dx)).collect();
        Self { dx, cumulative, bandwidth: dx, time: 0.0 }
    }

    pub fn window(&self) -> f64 {
        self.dx * (self.cumulative.len() - 1) as f64
    }

    /// Total mass in the window.
    pub fn mass(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Monte Carlo estimate from the current paths, barrier `level` at time
    /// `t`: `C(x) = E[(G(level − B + x) − G(S))⁺]`, on `points` grid points
    /// up to `x_max`, using at most `max_paths` paths. The increments are
    /// clamped by `sup g · Φ((level + x)/√t)`.
    pub(crate) fn from_paths(
        eng: &PathEngine,
        g: &IntensitySpec,
        level: f64,
        t: f64,
        x_max: f64,
        points: usize,
        max_paths: usize,
    ) -> Self {
        let m = eng.m.min(max_paths).max(1);
        let dx = x_max / points as f64;
        let mut cumulative = vec![0.0; points + 1];
        for i in 0..m {
            let base = g.mass(eng.s[i]);
            let u = level - eng.b[i];
            for (k, c) in cumulative.iter_mut().enumerate().skip(1) {
                let v = g.mass((u + k as f64 * dx).max(0.0)) - base;
                if v > 0.0 {
                    *c += v;
                }
            }
        }
        let bound = g.bound();
        let st = t.max(1e-300).sqrt();
        let mut prev_raw = 0.0;
        let mut acc = 0.0;
        for k in 1..=points {
            let raw = cumulative[k] / m as f64;
            let cap = bound * norm_cdf((level + k as f64 * dx) / st) * dx;
            acc += (raw - prev_raw).clamp(0.0, cap.max(0.0));
            prev_raw = raw;
            cumulative[k] = acc;
        }
        Self { dx, cumulative, bandwidth: dx.max((m as f64).powf(-1.0 / 3.0) * dx), time: t }
    }
}

/// Size of the barrier jump forced by the mass below it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "size", rename_all = "snake_case")]
pub enum JumpSize {
    Finite(f64),
    /// The mass stays ahead of `x` over the whole window.
    Explosion,
}

impl JumpSize {
    pub fn finite(self) -> Option<f64> {
        match self {
            JumpSize::Finite(x) => Some(x),
            JumpSize::Explosion => None,
        }
    }
}

/// `inf{x > 0 : C(x) < x}` read off the grid: the first grid point with
/// `C < x`, refined by linear interpolation of `C(x) − x` from the previous
/// point. Zero when the first grid point already qualifies.
pub fn physical_jump_size(dens: &SubBarrierDensity) -> JumpSize {
    let c = &dens.cumulative;
    for k in 1..c.len() {
        let x = k as f64 * dens.dx;
        let h = c[k] - x;
        if h < 0.0 {
            if k == 1 {
                return JumpSize::Finite(0.0);
            }
            let xp = x - dens.dx;
            let hp = c[k - 1] - xp;
            return JumpSize::Finite(xp + dens.dx * hp / (hp - h));
        }
    }
    JumpSize::Explosion
}
