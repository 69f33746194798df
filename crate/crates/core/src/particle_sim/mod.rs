//! The finite particle system: Brownian particles started from a Poisson
//! cloud, absorbed by a barrier that rises by `jump_unit` per absorption.
//!
//! [`run_exact`] is event driven and exact in law; [`run_euler`] steps time
//! on a grid with bridge-corrected crossing checks. Both produce an
//! [`EventLog`] from which the barrier path can be read at any time.

mod cascade;
mod euler;
mod exact;
mod fixed_barrier;

pub use cascade::{resolve_cascade, resolve_cascade_brute};
pub use euler::run_euler;
pub use exact::run_exact;
pub use fixed_barrier::{run_fixed_barrier, CountingPath, FixedBarrier};

use serde::{Deserialize, Serialize};

use crate::densities::{check_conditions, IntensitySpec, Scan};
use crate::error::{Error, Result};
use crate::sampling::SeedSpec;

/// How surviving particles are refreshed at each barrier jump in the exact scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resample {
    /// Every survivor is re-drawn at every event (reference, `O(alive)` per event).
    Full,
    /// Only particles whose protective level the barrier reaches are re-drawn.
    Lazy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scheme {
    Exact { resample: Resample },
    Euler { dt: f64 },
}

impl Default for Scheme {
    fn default() -> Self {
        Scheme::Exact { resample: Resample::Lazy }
    }
}

fn default_margin() -> f64 {
    6.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub intensity: IntensitySpec,
    /// `N`: the cloud has intensity `N·g`.
    pub rate_scale: f64,
    /// Barrier increase per absorbed particle.
    pub jump_unit: f64,
    pub horizon: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// The window always reaches `margin·√T` beyond the barrier.
    #[serde(default = "default_margin")]
    pub truncation_margin: f64,
    pub seed: SeedSpec,
    /// A cascade pushing the barrier past this level ends the run as exploded.
    #[serde(default)]
    pub explosion_cap: Option<f64>,
    /// Expected upper bound on the barrier over the horizon; sets the
    /// initial window. Derived from the intensity when omitted and possible.
    #[serde(default)]
    pub barrier_bound: Option<f64>,
    /// Upper limit on sampled particles before the run is refused.
    #[serde(default)]
    pub max_particles: Option<usize>,
}

impl SimConfig {
    pub fn new(intensity: IntensitySpec, rate_scale: f64, jump_unit: f64, horizon: f64, seed: SeedSpec) -> Self {
        Self {
            intensity,
            rate_scale,
            jump_unit,
            horizon,
            scheme: Scheme::default(),
            truncation_margin: default_margin(),
            seed,
            explosion_cap: None,
            barrier_bound: None,
            max_particles: None,
        }
    }

    /// The usual family: `N` particles per unit mass, each worth `1/N`.
    pub fn n_system(intensity: IntensitySpec, n: f64, horizon: f64, seed: SeedSpec) -> Self {
        Self::new(intensity, n, 1.0 / n, horizon, seed)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.explosion_cap = Some(cap);
        self
    }

    pub fn with_barrier_bound(mut self, z: f64) -> Self {
        self.barrier_bound = Some(z);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jump_unit > 0.0 && self.jump_unit.is_finite()) {
            return Err(Error::config("jump_unit must be positive"));
        }
        if !(self.rate_scale > 0.0 && self.rate_scale.is_finite()) {
            return Err(Error::config("rate_scale must be positive"));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::config("horizon must be finite and ≥ 0"));
        }
        if !(self.truncation_margin >= 3.0) {
            return Err(Error::config("truncation_margin must be ≥ 3"));
        }
        if let Scheme::Euler { dt } = self.scheme {
            if !(dt > 0.0) {
                return Err(Error::config("Euler step must be positive"));
            }
        }
        Ok(())
    }

    /// Barrier bound `z` used for the initial window, and whether the
    /// intensity needs an explosion cap.
    pub(crate) fn plan_window(&self) -> Result<f64> {
        let x_max = 200.0_f64.max(4.0 * self.horizon);
        let scan = Scan::new(x_max, (x_max / 2e4).max(0.01));
        let report = check_conditions(&self.intensity, &scan);
        let risky = !report.a2.holds || report.blowup.is_some();
        if risky && self.explosion_cap.is_none() {
            return Err(Error::config(
                "this intensity can blow up (no eventual mass deficit, or the blow-up criterion fires); \
                 set explosion_cap",
            ));
        }
        if let Some(z) = self.barrier_bound {
            return Ok(z.max(0.0));
        }
        if let Some(b) = linear_bound(&self.intensity, self.horizon, &scan) {
            return Ok(b.z);
        }
        // no bound available: start small and let the window grow
        Ok(self.explosion_cap.unwrap_or(1.0).min(1.0 + self.horizon.sqrt()))
    }
}

/// A straight line that the barrier stays below with high probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearBound {
    pub slope: f64,
    pub offset: f64,
    /// `slope·T + offset`.
    pub z: f64,
}

/// Line `c·t + x*` with `Γ(line) < line`, built from the mass deficit
/// `ε = −∫₀^{x*}(g − 1)` and the bound `C` as `c = C/ε`; the offset is chosen
/// to minimise the value at the horizon.
pub fn linear_bound(spec: &IntensitySpec, horizon: f64, scan: &Scan) -> Option<LinearBound> {
    let c_bound = spec.bound();
    let n = (scan.x_max / scan.step).floor() as usize;
    let xs: Vec<f64> = (1..=n).map(|j| j as f64 * scan.step).collect();
    let h: Vec<f64> = xs.iter().map(|&x| spec.mass(x) - x).collect();
    let mut suffix = vec![f64::NEG_INFINITY; n + 1];
    for j in (0..n).rev() {
        suffix[j] = suffix[j + 1].max(h[j]);
    }
    let mut best: Option<LinearBound> = None;
    for j in 0..n {
        if h[j] < 0.0 && h[j] >= suffix[j] - 1e-12 * (1.0 + h[j].abs()) {
            let eps = -h[j];
            let slope = if c_bound == 0.0 { 0.0 } else { c_bound / eps };
            let z = slope * horizon + xs[j];
            if best.is_none_or(|b| z < b.z) {
                best = Some(LinearBound { slope, offset: xs[j], z });
            }
        }
    }
    best
}

/// One cascade.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub barrier_before: f64,
    /// Number of particles absorbed.
    pub k: usize,
    /// Indices into the sorted initial cloud, in absorption order.
    pub absorbed: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Terminal {
    Completed,
    Exploded { time: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Particles sampled, including window extensions.
    pub particles: usize,
    pub final_window: f64,
    pub extensions: usize,
    /// Late-sampled particles that had already crossed the barrier level
    /// before they were sampled; dropped. Nonzero means the margin was too small.
    pub truncation_violations: usize,
    /// Killed-kernel redraws (exact scheme) or particle steps (Euler).
    pub resamples: u64,
    pub alive_at_end: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub jump_unit: f64,
    pub rate_scale: f64,
    pub horizon: f64,
    pub intensity: IntensitySpec,
    pub seed: SeedSpec,
    pub events: Vec<Event>,
    pub terminal: Terminal,
    pub diagnostics: Diagnostics,
}

impl EventLog {
    pub fn absorbed_total(&self) -> usize {
        self.events.iter().map(|e| e.k).sum()
    }

    /// Barrier height after all events up to and including `t`.
    pub fn barrier_at(&self, t: f64) -> f64 {
        let idx = self.events.partition_point(|e| e.time <= t);
        let n: usize = self.events[..idx].iter().map(|e| e.k).sum();
        self.jump_unit * n as f64
    }

    pub fn final_barrier(&self) -> f64 {
        self.jump_unit * self.absorbed_total() as f64
    }

    /// The barrier as a right-continuous step path.
    pub fn path(&self) -> StepPath {
        let mut times = Vec::with_capacity(self.events.len());
        let mut values = Vec::with_capacity(self.events.len());
        let mut n = 0usize;
        for e in &self.events {
            n += e.k;
            times.push(e.time);
            values.push(self.jump_unit * n as f64);
        }
        StepPath { times, values, initial: 0.0 }
    }

    /// Rows `(event_index, time, barrier_before, k, barrier_after)`.
    pub fn rows(&self) -> Vec<(usize, f64, f64, usize, f64)> {
        let mut n = 0usize;
        self.events
            .iter()
            .enumerate()
            .map(|(i, e)| {
                n += e.k;
                (i, e.time, e.barrier_before, e.k, self.jump_unit * n as f64)
            })
            .collect()
    }
}

/// Right-continuous non-decreasing step function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub initial: f64,
}

impl StepPath {
    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            self.initial
        } else {
            self.values[i - 1]
        }
    }

    /// Left limit at `t`.
    pub fn value_before(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s < t);
        if i == 0 {
            self.initial
        } else {
            self.values[i - 1]
        }
    }

    pub fn scale(&self, time_factor: f64, value_factor: f64) -> StepPath {
        StepPath {
            times: self.times.iter().map(|t| t * time_factor).collect(),
            values: self.values.iter().map(|v| v * value_factor).collect(),
            initial: self.initial * value_factor,
        }
    }
}

/// `t ↦ ξ_{N²a²t} = N·a·Λ^N_t`: the same run read in the unit-density scale.
pub fn rescale_to_xi(log: &EventLog, n: f64, a: f64) -> StepPath {
    log.path().scale(n * n * a * a, n * a)
}

/// Inverse of [`rescale_to_xi`].
pub fn unrescale(path: &StepPath, n: f64, a: f64) -> StepPath {
    path.scale(1.0 / (n * n * a * a), 1.0 / (n * a))
}

/// Runs whichever scheme the configuration names.
pub fn run(config: &SimConfig) -> Result<EventLog> {
    match config.scheme {
        Scheme::Exact { .. } => run_exact(config),
        Scheme::Euler { .. } => run_euler(config),
    }
}
