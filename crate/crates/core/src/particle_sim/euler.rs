//! Fixed-step simulation with bridge-corrected crossing checks.
//!
//! Crossings inside a step are detected with the Brownian bridge crossing
//! probability, so the only error is that a cascade is resolved at the end
//! of the step rather than at the crossing time.
//!
//! Each particle draws from its own stream, a normal and a uniform every
//! step it is alive. Two runs from the same seed therefore move every
//! particle along the same path for as long as it survives in both, which
//! couples runs that differ only in the jump unit or the cap.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{resolve_cascade, Diagnostics, Event, EventLog, Scheme, SimConfig, Terminal};
use crate::closed_form::{bridge_cross_prob, sample_killed, sample_level_hit};
use crate::error::{Error, Result};
use crate::sampling::{points_between, Purpose};

const DEFAULT_BUDGET: usize = 20_000_000;

/// Euler run with step `dt`; the last step is shortened to land on the horizon.
pub fn run_euler(cfg: &SimConfig) -> Result<EventLog> {
    cfg.validate()?;
    let dt = match cfg.scheme {
        Scheme::Euler { dt } => dt,
        Scheme::Exact { .. } => return Err(Error::config("run_euler needs the Euler scheme")),
    };
    let a = cfg.jump_unit;
    let horizon = cfg.horizon;
    let reach = cfg.truncation_margin * horizon.sqrt().max(1e-3);
    let cap = cfg.explosion_cap.unwrap_or(f64::INFINITY);
    let budget = cfg.max_particles.unwrap_or(DEFAULT_BUDGET);
    let cloud_seed = cfg.seed.purpose(Purpose::Cloud);
    let motion = cfg.seed.purpose(Purpose::Motion);
    let mut rngs: Vec<ChaCha8Rng> = Vec::new();

    let mut pos: Vec<f64> = Vec::new();
    let mut alive: Vec<u32> = Vec::new();
    let mut diag = Diagnostics::default();
    let mut window = 0.0;
    let mut b = 0.0;
    let mut absorbed_total = 0usize;
    let mut events = Vec::new();
    let mut terminal = Terminal::Completed;

    let extend = |need: f64,
                      t: f64,
                      b: f64,
                      window: &mut f64,
                      pos: &mut Vec<f64>,
                      alive: &mut Vec<u32>,
                      diag: &mut Diagnostics,
                      rngs: &mut Vec<ChaCha8Rng>|
     -> Result<()> {
        if need <= *window {
            return Ok(());
        }
        let new_x = need.max(*window + reach.max(0.25 * *window));
        let fresh = points_between(&cfg.intensity, cfg.rate_scale, *window, new_x, &cloud_seed);
        if pos.len() + fresh.len() > budget {
            return Err(Error::config(format!(
                "window extension to {new_x:.4} needs {} particles, over the budget of {budget}",
                pos.len() + fresh.len()
            )));
        }
        for x in fresh {
            let i = pos.len() as u32;
            let mut rng = motion.substream(i as u64);
            if t > 0.0 {
                if sample_level_hit(x, b, &mut rng) <= t {
                    diag.truncation_violations += 1;
                    pos.push(f64::NAN);
                    rngs.push(rng);
                    continue;
                }
                pos.push(sample_killed(x, b, t, &mut rng));
            } else {
                pos.push(x);
            }
            rngs.push(rng);
            alive.push(i);
        }
        if *window > 0.0 {
            diag.extensions += 1;
        }
        diag.particles = pos.len();
        *window = new_x;
        Ok(())
    };

    let z = cfg.plan_window()?;
    extend(z + reach, 0.0, b, &mut window, &mut pos, &mut alive, &mut diag, &mut rngs)?;

    let steps = (horizon / dt).ceil() as usize;
    let mut crossed: Vec<u32> = Vec::new();
    'outer: for s in 0..steps {
        let t0 = s as f64 * dt;
        let t1 = ((s + 1) as f64 * dt).min(horizon);
        let h = t1 - t0;
        if h <= 0.0 {
            break;
        }
        let sh = h.sqrt();
        crossed.clear();
        for &i in &alive {
            let rng = &mut rngs[i as usize];
            let y0 = pos[i as usize];
            let z: f64 = rng.sample(StandardNormal);
            let u: f64 = rng.random();
            let y1 = y0 + sh * z;
            pos[i as usize] = y1;
            let hit = y1 <= b || u < bridge_cross_prob(y0, y1, b, h);
            if hit {
                crossed.push(i);
            }
        }
        diag.resamples += alive.len() as u64;
        if !crossed.is_empty() {
            for &i in &crossed {
                pos[i as usize] = b;
            }
            let (k, sorted) = loop {
                let mut sorted: Vec<(f64, u32)> = alive.iter().map(|&i| (pos[i as usize], i)).collect();
                sorted.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                let levels: Vec<f64> = sorted.iter().map(|p| p.0).collect();
                let k = resolve_cascade(&levels, b, a)?;
                let top = b + k as f64 * a;
                if top > cap {
                    terminal = Terminal::Exploded { time: t1 };
                    break 'outer;
                }
                if top + reach > window {
                    extend(top + reach, t1, b, &mut window, &mut pos, &mut alive, &mut diag, &mut rngs)?;
                    continue;
                }
                break (k, sorted);
            };
            let ids: Vec<u32> = sorted[..k].iter().map(|p| p.1).collect();
            for &i in &ids {
                pos[i as usize] = f64::NAN;
            }
            alive.retain(|&i| !pos[i as usize].is_nan());
            absorbed_total += k;
            events.push(Event { time: t1, barrier_before: b, k, absorbed: ids });
            b = a * absorbed_total as f64;
        }
        extend(b + reach, t1, b, &mut window, &mut pos, &mut alive, &mut diag, &mut rngs)?;
    }
    diag.final_window = window;
    diag.alive_at_end = alive.len();
    Ok(EventLog {
        jump_unit: a,
        rate_scale: cfg.rate_scale,
        horizon,
        intensity: cfg.intensity.clone(),
        seed: cfg.seed,
        events,
        terminal,
        diagnostics: diag,
    })
}
