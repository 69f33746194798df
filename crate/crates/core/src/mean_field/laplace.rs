//! The Laplace-transform identity satisfied by every solution, used as a
//! residual diagnostic.
//!
//! Up to time `t`, with `A_t = ∫ V(t, x) e^{−λx} dx` the transform of the
//! alive cloud:
//!
//! ```text
//! e^{−λ²t/2} A_t + D(λ) − e^{−λΛ_t − λ²t/2}/λ
//!   = (λ/2) ∫₀ᵗ e^{−λΛ_s − λ²s/2} ds
//!     + Σ_{jumps} e^{−λ²s/2} ( −∫_{Λ_{s−}}^{Λ_s} V(s−, x) e^{−λx} dx − Δe^{−λΛ_s}/λ )
//! ```
//!
//! where `D(λ) = ∫₀^∞ (1 − g) e^{−λx}`. Letting `t → ∞` for a continuous
//! solution leaves `D(λ) = (λ/2) ∫₀^∞ e^{−λΛ_s − λ²s/2} ds`.
//!
//! Time integrals treat `Λ` as linear between grid points and are exact on
//! each segment.

use serde::{Deserialize, Serialize};

use super::gamma::PathEngine;
use super::{GammaEvalConfig, GridFunction};
use crate::densities::IntensitySpec;
use crate::error::{Error, Result};

/// Contribution of one jump at time `time`: `∫_{Λ_{s−}}^{Λ_s} V(s−, x) e^{−λx} dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpTerm {
    pub time: f64,
    pub swept_transform: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LaplaceMode {
    /// Needs `e^{−λΛ_T − λ²T/2} < 1e−8` at the end of the grid.
    InfiniteHorizon,
    /// Identity up to `t`, given the alive transform `A_t` and the jumps on `[0, t]`.
    FiniteT { t: f64, alive_transform: f64, jumps: Vec<JumpTerm> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceResidual {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub abs: f64,
    /// `abs / |rhs|`.
    pub rel: f64,
}

// (λ/2) ∫ e^{−λΛ_s − λ²s/2} ds over [0, t], Λ linear between nodes
fn time_integral(lam: &GridFunction, lambda: f64, t: f64) -> f64 {
    let g = lam.grid();
    let v = lam.values();
    let mut total = 0.0;
    for j in 1..g.len() {
        let (t0, t1) = (g[j - 1], g[j].min(t));
        if t1 <= t0 {
            break;
        }
        let slope = (v[j] - v[j - 1]) / (g[j] - g[j - 1]);
        let a = lambda * v[j - 1] + 0.5 * lambda * lambda * t0;
        let b = lambda * slope + 0.5 * lambda * lambda;
        let h = t1 - t0;
        // ∫₀ʰ e^{−a − b s} ds
        let seg = if b * h < 1e-8 { h * (1.0 - 0.5 * b * h) } else { -(-b * h).exp_m1() / b };
        total += (-a).exp() * seg;
    }
    0.5 * lambda * total
}

/// `|LHS − RHS|` of the identity for `Λ` at `λ`.
pub fn laplace_residual(lam: &GridFunction, g: &IntensitySpec, lambda: f64, mode: &LaplaceMode) -> Result<LaplaceResidual> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("λ must be positive, got {lambda}")));
    }
    let d = g.laplace_deficit(lambda);
    let (lhs, rhs) = match mode {
        LaplaceMode::InfiniteHorizon => {
            let t = lam.horizon();
            let tail = (-lambda * *lam.values().last().unwrap() - 0.5 * lambda * lambda * t).exp();
            if tail >= 1e-8 {
                let needed = 2.0 * (1e8f64).ln() / (lambda * lambda);
                return Err(Error::domain(format!(
                    "horizon {t} too short at λ = {lambda}: e^(−λΛ_T − λ²T/2) = {tail:.3e}; \
                     a horizon of about {needed:.1} suffices whatever Λ does"
                )));
            }
            (d, time_integral(lam, lambda, t))
        }
        LaplaceMode::FiniteT { t, alive_transform, jumps } => {
            let t = *t;
            if !(t > 0.0 && t <= lam.horizon()) {
                return Err(Error::domain(format!("t = {t} outside the solution grid")));
            }
            let damp = (-0.5 * lambda * lambda * t).exp();
            let lt = lam.interp(t);
            let lhs = damp * alive_transform + d - (-lambda * lt).exp() * damp / lambda;
            let mut rhs = time_integral(lam, lambda, t);
            for j in jumps.iter().filter(|j| j.time <= t) {
                let before = lam.value_at(j.time - 1e-12 * (1.0 + j.time));
                let after = lam.value_at(j.time);
                let de = (-lambda * after).exp() - (-lambda * before).exp();
                rhs += (-0.5 * lambda * lambda * j.time).exp() * (-j.swept_transform - de / lambda);
            }
            (lhs, rhs)
        }
    };
    let abs = (lhs - rhs).abs();
    Ok(LaplaceResidual { lambda, lhs, rhs, abs, rel: abs / rhs.abs() })
}

/// Monte Carlo estimate of `A_t = ∫ V(t, x) e^{−λx} dx` for the cloud
/// following the barrier `lam` up to grid time `t`, as
/// `E[e^{−λB_t} ∫_{S_t}^∞ g(x) e^{−λx} dx]`.
pub fn alive_transform(lam: &GridFunction, g: &IntensitySpec, lambda: f64, t: f64, cfg: &GammaEvalConfig) -> Result<f64> {
    cfg.validate()?;
    let grid = lam.grid();
    let v = lam.values();
    let upper = grid.partition_point(|&s| s <= t);
    let mut eng = PathEngine::new(cfg, v[0].max(0.0));
    for j in 1..upper {
        eng.draw(j);
        eng.advance(grid[j] - grid[j - 1], v[j - 1], v[j]);
    }
    let tail = TailTransform::new(g, lambda);
    let [sum] = eng.reduce(|r| {
        let mut acc = 0.0;
        for i in r {
            acc += (-lambda * eng.b[i]).exp() * tail.at(eng.s[i]);
        }
        [acc]
    });
    Ok(sum / eng.m as f64)
}

// x ↦ ∫_x^∞ g(y) e^{−λy} dy, tabulated
struct TailTransform {
    dx: f64,
    table: Vec<f64>,
    lambda: f64,
    bound: f64,
}

impl TailTransform {
    fn new(g: &IntensitySpec, lambda: f64) -> Self {
        let x_max = 40.0 / lambda;
        let n = 40_000;
        let dx = x_max / n as f64;
        // Simpson on each cell, accumulated from the right
        let f = |x: f64| g.value(x) * (-lambda * x).exp();
        let mut table = vec![0.0; n + 1];
        for k in (0..n).rev() {
            let a = k as f64 * dx;
            let cell = dx / 6.0 * (f(a) + 4.0 * f(a + 0.5 * dx) + f(a + dx));
            table[k] = table[k + 1] + cell;
        }
        Self { dx, table, lambda, bound: g.bound() }
    }

    fn at(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        let pos = x / self.dx;
        let k = pos.floor() as usize;
        if k + 1 >= self.table.len() {
            return self.bound * (-self.lambda * x).exp() / self.lambda;
        }
        let w = pos - k as f64;
        self.table[k] * (1.0 - w) + self.table[k + 1] * w
    }
}
