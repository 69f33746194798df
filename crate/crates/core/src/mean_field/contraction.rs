//! How strongly `Γ` amplifies a small lift of its argument.

use serde::{Deserialize, Serialize};

use super::gamma::PathEngine;
use super::{GammaEvalConfig, GridFunction};
use crate::densities::{check_conditions, IntensitySpec, Scan};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contraction {
    /// `sup_t (Γ(Λ + ε)_t − Γ(Λ)_t)/ε`.
    pub kappa: f64,
    /// Standard error at the maximising time.
    pub se: f64,
    pub argmax: f64,
    /// False when the weak-feedback condition fails; the estimate is then
    /// not guaranteed to stay below 1.
    pub weak_feedback: bool,
}

/// Increment ratio of `Γ` at `Λ` for a lift `ε`, on `[0, horizon]`.
///
/// Both evaluations use the same paths, so the ratio is computed path by
/// path and its noise is that of the difference only.
pub fn estimate_contraction(
    g: &IntensitySpec,
    lam: &GridFunction,
    eps: f64,
    horizon: f64,
    cfg: &GammaEvalConfig,
) -> Result<Contraction> {
    cfg.validate()?;
    if !(eps > 0.0) {
        return Err(Error::domain("ε must be positive"));
    }
    let weak_feedback = check_conditions(g, &Scan::new(200.0, 0.01)).w.holds;
    let grid = lam.grid();
    let v = lam.values();
    let upper = grid.partition_point(|&s| s <= horizon).max(1);
    let mut base = PathEngine::new(cfg, v[0].max(0.0));
    let mut lift = PathEngine::new(cfg, (v[0] + eps).max(0.0));
    let n = cfg.paths as f64;
    let mut best = Contraction { kappa: f64::NEG_INFINITY, se: 0.0, argmax: 0.0, weak_feedback };
    let mut consider = |t: f64, base: &PathEngine, lift: &PathEngine| {
        let [s1, s2] = base.reduce(|r| {
            let mut acc = [0.0; 2];
            for i in r {
                let d = (g.mass(lift.s[i]) - g.mass(base.s[i])) / eps;
                acc[0] += d;
                acc[1] += d * d;
            }
            acc
        });
        let mean = s1 / n;
        let var = (s2 / n - mean * mean).max(0.0);
        if mean > best.kappa {
            best.kappa = mean;
            best.se = (var / n).sqrt();
            best.argmax = t;
        }
    };
    consider(0.0, &base, &lift);
    for j in 1..upper {
        let h = grid[j] - grid[j - 1];
        base.draw(j);
        lift.draw(j);
        base.advance(h, v[j - 1], v[j]);
        lift.advance(h, v[j - 1] + eps, v[j] + eps);
        consider(grid[j], &base, &lift);
    }
    Ok(best)
}
