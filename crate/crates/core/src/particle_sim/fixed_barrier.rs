//! Particles against a prescribed barrier: no feedback, no cascades. The
//! count absorbed by time `t`, divided by `N`, estimates `Γ(f)_t`.

use rand::Rng;
use rand_distr::{Distribution, InverseGaussian, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Scheme;
use crate::closed_form::{bridge_cross_prob, LinearBarrier};
use crate::error::{Error, Result};
use crate::mean_field::GridFunction;
use crate::sampling::{PointCloud, Purpose, SeedSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixedBarrier {
    Linear(LinearBarrier),
    /// Read linearly between grid points; the grid end is the horizon.
    Grid(GridFunction),
    /// `f ≡ +∞`: nothing is ever absorbed.
    Never,
}

/// Sorted absorption times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingPath {
    pub times: Vec<f64>,
    pub rate_scale: f64,
    pub horizon: f64,
}

impl CountingPath {
    pub fn count_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }

    /// `count/N`.
    pub fn value_at(&self, t: f64) -> f64 {
        self.count_at(t) as f64 / self.rate_scale
    }
}

// first passage of D + W_t − c·t to 0
fn linear_passage<R: Rng>(d: f64, c: f64, rng: &mut R) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    if c == 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        return d * d / (z * z);
    }
    if c < 0.0 {
        // drifting away: hits with probability e^{2cD}, and then like drift |c|
        let u: f64 = rng.random();
        if u >= (2.0 * c * d).exp() {
            return f64::INFINITY;
        }
    }
    let ig = InverseGaussian::new(d / c.abs(), d * d).expect("positive parameters");
    ig.sample(rng)
}

/// Absorption times of `cloud` against `f` up to `horizon`.
///
/// A linear barrier with the exact scheme uses the inverse Gaussian law of
/// the first passage. Otherwise each particle is stepped on the nodes of the
/// barrier (refined to the Euler step when one is given) with the Brownian
/// bridge crossing check, which is exact for a piecewise-linear barrier up to
/// reporting the crossing at the end of its step.
pub fn run_fixed_barrier(
    cloud: &PointCloud,
    f: &FixedBarrier,
    horizon: f64,
    scheme: Scheme,
    seed: &SeedSpec,
) -> Result<CountingPath> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::domain("horizon must be finite and ≥ 0"));
    }
    let mut rng = seed.purpose(Purpose::Motion).rng();
    let mut times = Vec::new();
    let nodes: Vec<(f64, f64)> = match (f, scheme) {
        (FixedBarrier::Never, _) => {
            return Ok(CountingPath { times, rate_scale: cloud.rate_scale, horizon });
        }
        (FixedBarrier::Linear(l), Scheme::Exact { .. }) => {
            for &x in &cloud.points {
                let tau = linear_passage(x - l.intercept, l.slope, &mut rng);
                if tau <= horizon {
                    times.push(tau);
                }
            }
            times.sort_by(f64::total_cmp);
            return Ok(CountingPath { times, rate_scale: cloud.rate_scale, horizon });
        }
        (FixedBarrier::Linear(l), Scheme::Euler { dt }) => {
            let n = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
            (0..=n)
                .map(|k| {
                    let t = (k as f64 * dt).min(horizon);
                    (t, l.value(t))
                })
                .collect()
        }
        (FixedBarrier::Grid(g), scheme) => {
            let mut v = Vec::new();
            let grid = g.grid();
            for j in 0..grid.len() {
                if grid[j] > horizon {
                    break;
                }
                v.push((grid[j], g.values()[j]));
                if let (Scheme::Euler { dt }, Some(&next)) = (scheme, grid.get(j + 1)) {
                    let end = next.min(horizon);
                    let sub = ((end - grid[j]) / dt - 1e-9).ceil() as usize;
                    for k in 1..sub {
                        let t = grid[j] + k as f64 * (end - grid[j]) / sub as f64;
                        v.push((t, g.interp(t)));
                    }
                }
            }
            v
        }
    };
    let f_max = nodes.iter().map(|n| n.1).fold(f64::NEG_INFINITY, f64::max);
    let span = nodes.last().map_or(0.0, |n| n.0).max(1e-12);
    for &x in &cloud.points {
        if x <= nodes[0].1 {
            times.push(0.0);
            continue;
        }
        if (x - f_max) / span.sqrt() > 12.0 {
            continue;
        }
        let mut w = x;
        for k in 1..nodes.len() {
            let (t0, f0) = nodes[k - 1];
            let (t1, f1) = nodes[k];
            let h = t1 - t0;
            let z: f64 = rng.sample(StandardNormal);
            let w1 = w + h.sqrt() * z;
            // the bridge check is in the frame where the barrier is flat
            let crossed = w1 <= f1 || rng.random::<f64>() < bridge_cross_prob(w - f0, w1 - f1, 0.0, h);
            if crossed {
                times.push(t1);
                break;
            }
            w = w1;
        }
    }
    times.sort_by(f64::total_cmp);
    Ok(CountingPath { times, rate_scale: cloud.rate_scale, horizon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::gamma_linear;
    use crate::densities::IntensitySpec;
    use crate::numerics::mean_se;
    use crate::sampling::sample_ppp;

    fn counts(f: &FixedBarrier, scheme: Scheme, reps: u64, n: f64, t: f64) -> Vec<f64> {
        let g = IntensitySpec::constant(1.0).unwrap();
        (0..reps)
            .map(|r| {
                let s = SeedSpec::new(21).replica(r);
                let cloud = sample_ppp(&g, n, 12.0 + 2.0 * t, &s).unwrap();
                run_fixed_barrier(&cloud, f, t, scheme, &s).unwrap().count_at(t) as f64
            })
            .collect()
    }

    #[test]
    fn never_is_empty() {
        let cloud = sample_ppp(&IntensitySpec::constant(1.0).unwrap(), 10.0, 5.0, &SeedSpec::new(1)).unwrap();
        let p = run_fixed_barrier(&cloud, &FixedBarrier::Never, 1.0, Scheme::default(), &SeedSpec::new(1)).unwrap();
        assert_eq!(p.count_at(1.0), 0);
    }

    #[test]
    fn linear_mean_and_dispersion() {
        let (c, d, t, n) = (1.0, 1.0, 2.0, 50.0);
        let f = FixedBarrier::Linear(LinearBarrier::new(c, -d));
        let xs = counts(&f, Scheme::default(), 400, n, t);
        let (m, se) = mean_se(&xs);
        let exact = n * gamma_linear(c, -d, t);
        assert!((m - exact).abs() < 3.0 * se, "{m} ± {se} vs {exact}");
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((var / m - 1.0).abs() < 0.2, "dispersion {}", var / m);
    }

    #[test]
    fn stepped_linear_agrees() {
        let (c, d, t, n) = (2.0, 0.5, 1.0, 50.0);
        let f = FixedBarrier::Linear(LinearBarrier::new(c, -d));
        let xs = counts(&f, Scheme::Euler { dt: 0.01 }, 300, n, t);
        let (m, se) = mean_se(&xs);
        let exact = n * gamma_linear(c, -d, t);
        assert!((m - exact).abs() < 3.0 * se, "{m} ± {se} vs {exact}");
        let grid = crate::mean_field::uniform_grid(t, 0.05).unwrap();
        let gf = GridFunction::from_fn(grid, |s| c * s - d).unwrap();
        let xs = counts(&FixedBarrier::Grid(gf), Scheme::default(), 300, n, t);
        let (m, se) = mean_se(&xs);
        assert!((m - exact).abs() < 3.0 * se, "{m} ± {se} vs {exact}");
    }
}
