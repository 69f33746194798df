//! Unit density: the barrier grows like `t^{2/3}` and, rescaled, converges to
//! `R_t = inf{x : ∫₀ˣ 2 b(s)⁺ ds > t}` for a Brownian motion `b` run in the
//! space variable.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::densities::{Family, IntensitySpec};
use crate::error::{Error, Result};
use crate::particle_sim::EventLog;
use crate::sampling::{Purpose, SeedSpec};

const CHUNK: usize = 1 << 14;

/// Brownian path `b(k·dx)` with `b(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacePath {
    pub dx: f64,
    pub values: Vec<f64>,
    /// `None` for hand-built paths, which cannot be extended.
    pub seed: Option<SeedSpec>,
}

impl SpacePath {
    /// A given path, e.g. a deterministic test profile.
    pub fn from_values(dx: f64, values: Vec<f64>) -> Result<Self> {
        if !(dx > 0.0) || values.len() < 2 {
            return Err(Error::domain("need dx > 0 and at least two points"));
        }
        if values[0] != 0.0 {
            return Err(Error::domain("space path must start at 0"));
        }
        Ok(Self { dx, values, seed: None })
    }

    pub fn window(&self) -> f64 {
        self.dx * (self.values.len() - 1) as f64
    }

    /// Grows the sampled path to cover `[0, x_max]`, reproducing exactly the
    /// path a longer initial draw would have given.
    pub fn extend_to(&mut self, x_max: f64) -> Result<()> {
        let Some(seed) = self.seed else {
            return Err(Error::domain("only sampled paths can be extended"));
        };
        let steps = (x_max / self.dx - 1e-9).ceil() as usize;
        let sd = self.dx.sqrt();
        let stream = seed.purpose(Purpose::SpacePath);
        while self.values.len() <= steps {
            // next increment index, and the chunk it belongs to
            let k = self.values.len() - 1;
            let chunk = k / CHUNK;
            let mut rng = stream.substream(chunk as u64);
            let skip = k - chunk * CHUNK;
            for _ in 0..skip {
                let _: f64 = rng.sample(StandardNormal);
            }
            let mut b = *self.values.last().unwrap();
            for _ in skip..CHUNK {
                if self.values.len() > steps {
                    break;
                }
                let z: f64 = rng.sample(StandardNormal);
                b += sd * z;
                self.values.push(b);
            }
        }
        Ok(())
    }
}

/// Standard Brownian motion on `[0, x_max]` with step `dx`.
pub fn sample_space_bm(dx: f64, x_max: f64, seed: &SeedSpec) -> Result<SpacePath> {
    if !(dx > 0.0 && x_max > 0.0 && x_max.is_finite()) {
        return Err(Error::domain("need dx > 0 and a positive finite window"));
    }
    let mut p = SpacePath { dx, values: vec![0.0], seed: Some(*seed) };
    p.extend_to(x_max)?;
    Ok(p)
}

// trapezoid cumulative of 2·b⁺
fn integrated_positive_part(path: &SpacePath) -> Vec<f64> {
    let mut out = Vec::with_capacity(path.values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in path.values.windows(2) {
        acc += (w[0].max(0.0) + w[1].max(0.0)) * path.dx;
        out.push(acc);
    }
    out
}

/// `R_t` for each `t` in `times` (ascending): the first `x` where the
/// integrated positive part strictly exceeds `t`, interpolated inside the
/// grid cell.
pub fn r_process(path: &SpacePath, times: &[f64]) -> Result<Vec<f64>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("times must be sorted"));
    }
    let cum = integrated_positive_part(path);
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let j = cum.partition_point(|&c| c <= t);
        if j == cum.len() {
            return Err(Error::WindowExhausted(format!(
                "∫2b⁺ over [0, {:.4}] is {total:.6}, short of t = {t} by {:.6}",
                path.window(),
                t - total
            )));
        }
        if j == 0 {
            out.push(0.0);
            continue;
        }
        let (c0, c1) = (cum[j - 1], cum[j]);
        out.push(path.dx * ((j - 1) as f64 + (t - c0) / (c1 - c0)));
    }
    Ok(out)
}

/// `R` at `times` (ascending) for a fresh path, generated on the fly without
/// storing it. The path is the one [`sample_space_bm`] gives for the same
/// seed. `R` has a heavy upper tail, so the walk stops at `x_cap` and any
/// time not yet reached reads as `+∞`.
pub fn sample_r(times: &[f64], dx: f64, x_cap: f64, seed: &SeedSpec) -> Result<Vec<f64>> {
    if !(dx > 0.0 && x_cap > 0.0 && x_cap.is_finite()) {
        return Err(Error::domain("need dx > 0 and a positive finite cap"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("times must be sorted"));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut pending = times.iter().copied().peekable();
    while let Some(&t) = pending.peek() {
        if t >= 0.0 {
            break;
        }
        out.push(0.0);
        pending.next();
    }
    let steps = (x_cap / dx - 1e-9).ceil() as usize;
    let sd = dx.sqrt();
    let stream = seed.purpose(Purpose::SpacePath);
    let (mut b, mut acc) = (0.0f64, 0.0f64);
    let mut k = 0usize;
    'walk: while k < steps && pending.peek().is_some() {
        let mut rng = stream.substream((k / CHUNK) as u64);
        for _ in 0..CHUNK {
            let z: f64 = rng.sample(StandardNormal);
            let next = b + sd * z;
            let before = acc;
            acc += (b.max(0.0) + next.max(0.0)) * dx;
            b = next;
            k += 1;
            while let Some(&t) = pending.peek() {
                if acc <= t {
                    break;
                }
                out.push(dx * ((k - 1) as f64 + (t - before) / (acc - before)));
                pending.next();
            }
            if k >= steps || pending.peek().is_none() {
                break 'walk;
            }
        }
    }
    out.extend(pending.map(|_| f64::INFINITY));
    Ok(out)
}

/// `Λ^N_t / N^{1/3}` at `times` for a unit-density run with jump `1/N`.
pub fn critical_rescale(log: &EventLog, n: f64, times: &[f64]) -> Result<Vec<f64>> {
    let unit = matches!(log.intensity.family(), Family::Constant { a } if *a == 1.0);
    if !unit {
        return Err(Error::domain("critical rescaling needs the unit constant density"));
    }
    if (log.jump_unit * n - 1.0).abs() > 1e-9 || (log.rate_scale - n).abs() > 1e-9 * n {
        return Err(Error::domain(format!(
            "log has jump {} and rate {}, expected 1/N and N for N = {n}",
            log.jump_unit, log.rate_scale
        )));
    }
    let s = n.cbrt();
    Ok(times.iter().map(|&t| log.barrier_at(t) / s).collect())
}

/// The unit density, for convenience.
pub fn unit_density() -> IntensitySpec {
    IntensitySpec::constant(1.0).expect("1 is a valid density")
}
