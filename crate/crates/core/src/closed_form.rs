//! Special functions and exact formulas: the Gaussian toolbox, absorbed mass
//! under a straight-line barrier, the self-similar speed constant and the
//! one-dimensional Brownian laws the simulators sample from.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const SQRT_PI_OVER_2: f64 = 1.253_314_137_315_500_3;

/// Values of the standard Gaussian at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StdNormal {
    pub cdf: f64,
    pub pdf: f64,
    /// `erf(x / √2)`, i.e. `2Φ(x) − 1` without the cancellation.
    pub erf: f64,
}

pub fn std_normal(x: f64) -> StdNormal {
    StdNormal {
        cdf: norm_cdf(x),
        pdf: norm_pdf(x),
        erf: libm::erf(x / SQRT_2),
    }
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Upper tail `1 − Φ(x)`.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Scaled complementary error function `e^{x²} erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 5.0 {
        return (x * x).exp() * libm::erfc(x);
    }
    // continued fraction, converges fast for large x
    let mut t = x;
    for n in (1..=60).rev() {
        t = x + 0.5 * n as f64 / t;
    }
    FRAC_1_SQRT_PI / t
}

/// Mills ratio `(1 − Φ(k)) / φ(k)`.
#[inline]
pub fn mills_ratio(k: f64) -> f64 {
    SQRT_PI_OVER_2 * erfcx(k / SQRT_2)
}

/// The map `K ↦ K√(2π)(1 − Φ(K))e^{K²/2}` whose inverse is [`k_alpha`].
pub fn k_alpha_map(k: f64) -> f64 {
    k * mills_ratio(k)
}

fn k_alpha_map_deriv(k: f64) -> f64 {
    let r = mills_ratio(k);
    r + k * (k * r - 1.0)
}

/// Speed constant of the self-similar barrier `K√t` for a constant initial
/// density `a ∈ (0, 1)`.
pub fn k_alpha(a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::domain(format!("density level must lie in (0,1), got {a}")));
    }
    let mut lo = 1e-8;
    let mut hi = 10.0;
    if k_alpha_map(lo) > a {
        // below the first-order regime K ≈ a√(π/2); solve the linear form
        return Ok(a / SQRT_PI_OVER_2);
    }
    // the map creeps towards 1 like 1 − 1/K², so levels near 1 need a wider bracket
    while k_alpha_map(hi) <= a {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numeric(format!("no bracket for K at a = {a}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if k_alpha_map(mid) < a {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-9 * hi {
            break;
        }
    }
    let mut k = 0.5 * (lo + hi);
    for _ in 0..8 {
        let r = k_alpha_map(k) - a;
        if r == 0.0 {
            break;
        }
        let step = r / k_alpha_map_deriv(k);
        let next = k - step;
        if !(next > lo * 0.5 && next < hi * 2.0) {
            break;
        }
        k = next;
    }
    Ok(k)
}

/// The line `t ↦ slope·t + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearBarrier {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearBarrier {
    pub fn new(slope: f64, intercept: f64) -> Self {
        Self { slope, intercept }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.slope * t + self.intercept
    }

    /// Expected absorbed mass at time `t` for unit density.
    pub fn gamma(&self, t: f64) -> f64 {
        gamma_linear(self.slope, self.intercept, t)
    }
}

/// Expected mass absorbed by time `t` from a unit-density cloud when the
/// barrier is the line `c·t + intercept`.
///
/// Equals `E[max(0, intercept + sup_{s≤t}(c·s + W_s))]`. For a non-positive
/// intercept `−d` the reflection formula for drifted Brownian maxima gives
/// a closed form; a positive intercept just adds to the drifted maximum,
/// which is already non-negative.
pub fn gamma_linear(c: f64, intercept: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return intercept.max(0.0);
    }
    if intercept > 0.0 {
        return intercept + gamma_linear(c, 0.0, t);
    }
    let d = -intercept;
    let st = t.sqrt();
    let u1 = (d - c * t) / st;
    let first = st * (norm_pdf(u1) - u1 * norm_sf(u1));
    if c.abs() < 1e-9 {
        return 2.0 * first;
    }
    let u2 = (d + c * t) / st;
    // e^{2cd}(1 − Φ(u2)) rewritten so that nothing overflows
    let reflected = 0.5 * erfcx(u2 / SQRT_2) * (-0.5 * u1 * u1).exp();
    let second = (norm_sf(u1) - reflected) / (2.0 * c);
    (first + second).max(0.0)
}

/// `P(sup_{s≤t}(W_s + c·s) > y)` for `y ≥ 0`.
pub fn drifted_max_sf(c: f64, y: f64, t: f64) -> f64 {
    if y <= 0.0 {
        return 1.0;
    }
    if t <= 0.0 {
        return 0.0;
    }
    let st = t.sqrt();
    let u1 = (y - c * t) / st;
    let u2 = (y + c * t) / st;
    let reflected = if u2 >= 0.0 {
        // e^{2cy}(1 − Φ(u2)) = ½·erfcx(u2/√2)·e^{−u1²/2}
        0.5 * erfcx(u2 / SQRT_2) * (-0.5 * u1 * u1).exp()
    } else {
        (2.0 * c * y).exp() * norm_sf(u2)
    };
    (norm_sf(u1) + reflected).min(1.0)
}

/// `P(τ_b ≤ t)` for a Brownian motion started at `x0` and the level `b`.
pub fn level_hit_cdf(x0: f64, b: f64, t: f64) -> f64 {
    if x0 <= b {
        return 1.0;
    }
    if t <= 0.0 {
        return 0.0;
    }
    libm::erfc((x0 - b) / (2.0 * t).sqrt())
}

/// Draws the hitting time of level `b` from `x0`; zero when already at or below.
pub fn sample_level_hit<R: Rng + ?Sized>(x0: f64, b: f64, rng: &mut R) -> f64 {
    if x0 <= b {
        return 0.0;
    }
    let z: f64 = rng.sample(StandardNormal);
    let d = x0 - b;
    (d * d) / (z * z)
}

/// Probability that a Brownian bridge of duration `h` between `xa` and `xb`
/// touches the level `b`.
pub fn bridge_cross_prob(xa: f64, xb: f64, b: f64, h: f64) -> f64 {
    if xa <= b || xb <= b {
        return 1.0;
    }
    (-2.0 * (xa - b) * (xb - b) / h).exp()
}

/// Maximum of a Brownian bridge from `ya` to `yb` over duration `h`, given
/// a uniform `u ∈ (0, 1]` (inverse transform).
#[inline]
pub fn bridge_max(ya: f64, yb: f64, h: f64, u: f64) -> f64 {
    let dy = yb - ya;
    0.5 * (ya + yb + (dy * dy - 2.0 * h * u.ln()).sqrt())
}

/// Position after time `dt` of a Brownian motion started at `x0 > level`,
/// conditioned not to have touched `level`.
pub fn sample_killed<R: Rng + ?Sized>(x0: f64, level: f64, dt: f64, rng: &mut R) -> f64 {
    if dt <= 0.0 {
        return x0;
    }
    let s = dt.sqrt();
    let u = (x0 - level) / s;
    if u >= 0.5 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            let y = u + z;
            if y <= 0.0 {
                continue;
            }
            let v: f64 = rng.random();
            if v >= (-2.0 * u * y).exp() {
                return level + s * y;
            }
        }
    }
    let v: f64 = rng.random();
    level + s * killed_quantile(u, 1.0 - v)
}

// D(z) = Φ(z+u) − Φ(z−u), computed without cancellation for tiny u.
fn band_mass(z: f64, u: f64) -> f64 {
    if u > 1e-3 {
        0.5 * (libm::erfc((z - u) / SQRT_2) - libm::erfc((z + u) / SQRT_2))
    } else {
        let r = 0.774_596_669_241_483_4 * u;
        let f = |s: f64| (-z * s - 0.5 * s * s).exp();
        norm_pdf(z) * u * (8.0 / 9.0 * f(0.0) + 5.0 / 9.0 * (f(r) + f(-r)))
    }
}

// Solves D(z) = v·D(0) for the conditioned endpoint (scaled units).
fn killed_quantile(u: f64, v: f64) -> f64 {
    let total = libm::erf(u / SQRT_2);
    let target = v.max(f64::MIN_POSITIVE) * total;
    let mut lo = 0.0;
    let mut hi = u + 8.0;
    while band_mass(hi, u) > target {
        lo = hi;
        hi *= 2.0;
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..100 {
        let d = band_mass(z, u) - target;
        if d > 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let slope = norm_pdf(z + u) - norm_pdf(z - u);
        let mut next = if slope < 0.0 { z - d / slope } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - z).abs() <= 1e-13 * (1.0 + z) || hi - lo <= 1e-14 * (1.0 + hi) {
            return next;
        }
        z = next;
    }
    z
}
