//! The mean-field free boundary.
//!
//! For a barrier path `f` the operator `Γ` returns the expected mass a
//! unit-rate cloud with density `g` loses to `f`:
//! `Γ(f)_t = E[G(S_t)]`, where `S_t = max(0, sup_{s≤t}(f_s − B_s))` and `G`
//! is the cumulative of `g`. Solutions of `Λ = Γ(Λ)` are the free boundaries;
//! [`solve_minimal`] finds the smallest one.

mod contraction;
mod density;
mod explosion;
mod gamma;
mod laplace;
mod solver;
mod speed;

pub use contraction::{estimate_contraction, Contraction};
pub use density::{physical_jump_size, JumpSize, SubBarrierDensity};
pub use explosion::{detect_explosion, BarrierSource};
pub use gamma::{eval_gamma, GammaEstimate};
pub use laplace::{alive_transform, laplace_residual, JumpTerm, LaplaceMode, LaplaceResidual};
pub use solver::{default_cap, solve_minimal, JumpRecord, SolveOptions, SolveReport, SolverMethod};
pub use speed::{asymptotic_speed, Speed};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::SeedSpec;

/// Non-decreasing function on a time grid, right-continuous and constant
/// between grid points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawGrid> for GridFunction {
    type Error = Error;
    fn try_from(r: RawGrid) -> Result<Self> {
        GridFunction::new(r.grid, r.values)
    }
}

impl From<GridFunction> for RawGrid {
    fn from(g: GridFunction) -> RawGrid {
        RawGrid { grid: g.grid, values: g.values }
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.first() != Some(&0.0) {
        return Err(Error::domain("time grid must start at 0"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain("time grid must be finite and strictly increasing"));
    }
    Ok(())
}

impl GridFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_grid(&grid)?;
        if values.len() != grid.len() {
            return Err(Error::domain(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| v.is_nan()) || values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("grid function values must be non-decreasing"));
        }
        Ok(Self { grid, values })
    }

    pub fn zero(grid: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![0.0; n])
    }

    pub fn constant(grid: Vec<f64>, c: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![c; n])
    }

    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Cadlag reading: the value at the last grid point `≤ t`.
    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.grid.partition_point(|&s| s <= t);
        self.values[i.saturating_sub(1)]
    }

    /// Piecewise-linear reading, constant beyond the horizon.
    pub fn interp(&self, t: f64) -> f64 {
        let i = self.grid.partition_point(|&s| s <= t);
        if i == 0 {
            return self.values[0];
        }
        if i == self.grid.len() {
            return *self.values.last().unwrap();
        }
        let (t0, t1) = (self.grid[i - 1], self.grid[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// `f + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v + c).collect() }
    }

    /// Largest pointwise gap to another function on the same grid.
    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.iter().copied().zip(self.values.iter().copied())
    }
}

/// `0, dt, 2dt, …` up to and including `horizon` (the last step may be short).
pub fn uniform_grid(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain("uniform grid needs dt > 0 and a positive finite horizon"));
    }
    let n = (horizon / dt - 1e-9).ceil() as usize;
    let mut g: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    g.push(horizon);
    Ok(g)
}

/// `0` followed by a geometric sequence from `first` to `horizon` with
/// `per_decade` points per factor of ten.
pub fn geometric_grid(first: f64, horizon: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(first > 0.0 && horizon > first && per_decade > 0) {
        return Err(Error::domain("geometric grid needs 0 < first < horizon"));
    }
    let r = 10f64.powf(1.0 / per_decade as f64);
    let n = ((horizon / first).ln() / r.ln() - 1e-9).ceil() as usize;
    let mut g = vec![0.0];
    g.extend((0..n).map(|i| first * r.powi(i as i32)));
    g.push(horizon);
    Ok(g)
}

fn default_batch() -> usize {
    4096
}

fn default_true() -> bool {
    true
}

/// Monte Carlo settings for `Γ`. The time step is the grid itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaEvalConfig {
    pub paths: usize,
    pub seed: SeedSpec,
    /// Reuse the same Brownian paths in every evaluation. With this off the
    /// Picard solver draws fresh paths each iteration.
    #[serde(default = "default_true")]
    pub common_random_numbers: bool,
    /// Paths per parallel batch; part of the stream layout, so changing it
    /// changes the numbers.
    #[serde(default = "default_batch")]
    pub batch: usize,
    /// Regress on two controls with known means: the Brownian endpoint and
    /// the loss of the same paths against a flat barrier.
    #[serde(default)]
    pub control_variate: bool,
}

impl GammaEvalConfig {
    pub fn new(paths: usize, seed: SeedSpec) -> Self {
        Self { paths, seed, common_random_numbers: true, batch: default_batch(), control_variate: false }
    }

    pub fn with_control_variate(mut self, on: bool) -> Self {
        self.control_variate = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::config("need at least one path"));
        }
        if self.batch == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        Ok(())
    }
}
