//! Initial intensities `g` on `[0, ∞)`, their cumulative masses and the
//! structural conditions that decide how the free boundary behaves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate, upper_gamma};

/// Non-decreasing profile onto `[0, 1]` used by [`Family::ScaledCdf`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Cdf {
    /// `1 − e^{−rate·x}`
    Exponential { rate: f64 },
    /// Right-continuous steps through sorted `[x, F(x)]` knots, the first at `x = 0`.
    Tabulated { knots: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Constant { a: f64 },
    /// `1 − e^{−v x}`; the barrier then moves at speed `v/2`.
    TravellingWave { v: f64 },
    ScaledCdf { alpha: f64, cdf: Cdf },
    /// Alternating empty and dense bands with geometrically growing edges
    /// `(L^{i+1} − 1)/(L − 1)`; the dense level is `(1 − alpha)·L`.
    GapDensity { ratio: f64, alpha: f64 },
    /// Zero on `[0, 1)`, then `1 + β x^{−β−1}`.
    HeavyTail { beta: f64 },
    /// Right-continuous steps through sorted `[x, g(x)]` knots, the first at `x = 0`.
    Tabulated { knots: Vec<[f64; 2]> },
}

/// A validated intensity together with its supremum.
///
/// Serializes as the bare [`Family`]; the bound is recomputed on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Family", into = "Family")]
pub struct IntensitySpec {
    family: Family,
    bound: f64,
}

impl From<IntensitySpec> for Family {
    fn from(s: IntensitySpec) -> Family {
        s.family
    }
}

impl TryFrom<Family> for IntensitySpec {
    type Error = Error;
    fn try_from(f: Family) -> Result<Self> {
        IntensitySpec::new(f)
    }
}

fn check_knots(knots: &[[f64; 2]], what: &str) -> Result<()> {
    if knots.is_empty() {
        return Err(Error::config(format!("{what}: no knots")));
    }
    if knots[0][0] != 0.0 {
        return Err(Error::config(format!("{what}: first knot must sit at x = 0")));
    }
    for w in knots.windows(2) {
        if !(w[1][0] > w[0][0]) {
            return Err(Error::config(format!("{what}: knot positions must increase strictly")));
        }
    }
    if knots.iter().any(|k| !(k[0].is_finite() && k[1].is_finite() && k[1] >= 0.0)) {
        return Err(Error::config(format!("{what}: knots must be finite with values ≥ 0")));
    }
    Ok(())
}

// index of the last knot at or left of x
fn knot_index(knots: &[[f64; 2]], x: f64) -> usize {
    knots.partition_point(|k| k[0] <= x).saturating_sub(1)
}

fn step_mass(knots: &[[f64; 2]], x: f64) -> f64 {
    let mut m = 0.0;
    for (i, k) in knots.iter().enumerate() {
        if k[0] >= x {
            break;
        }
        let end = knots.get(i + 1).map_or(x, |n| n[0].min(x));
        m += k[1] * (end - k[0]);
    }
    m
}

// ∫ step·e^{−λx} over all bands
fn step_laplace(knots: &[[f64; 2]], lambda: f64) -> f64 {
    let mut s = 0.0;
    for (i, k) in knots.iter().enumerate() {
        let lo = (-lambda * k[0]).exp();
        let hi = knots.get(i + 1).map_or(0.0, |n| (-lambda * n[0]).exp());
        s += k[1] * (lo - hi) / lambda;
    }
    s
}

/// Left edge `(L^{i+1} − 1)/(L − 1)` of the gap-density bands, `i ≥ −1`.
pub fn gap_edge(ratio: f64, i: i32) -> f64 {
    (ratio.powi(i + 1) - 1.0) / (ratio - 1.0)
}

impl IntensitySpec {
    pub fn new(family: Family) -> Result<Self> {
        let bad = |m: &str| Err(Error::config(m.to_string()));
        let bound = match &family {
            Family::Constant { a } => {
                if !(a.is_finite() && *a >= 0.0) {
                    return bad("constant density must be finite and ≥ 0");
                }
                *a
            }
            Family::TravellingWave { v } => {
                if !(v.is_finite() && *v > 0.0) {
                    return bad("travelling wave speed must be > 0");
                }
                1.0
            }
            Family::ScaledCdf { alpha, cdf } => {
                if !(alpha.is_finite() && *alpha >= 0.0) {
                    return bad("cdf scale must be finite and ≥ 0");
                }
                match cdf {
                    Cdf::Exponential { rate } => {
                        if !(rate.is_finite() && *rate > 0.0) {
                            return bad("cdf rate must be > 0");
                        }
                    }
                    Cdf::Tabulated { knots } => {
                        check_knots(knots, "cdf")?;
                        if knots.windows(2).any(|w| w[1][1] < w[0][1]) || knots.iter().any(|k| k[1] > 1.0) {
                            return bad("tabulated cdf must be non-decreasing within [0, 1]");
                        }
                        if knots.last().map(|k| k[1]) != Some(1.0) {
                            return bad("tabulated cdf must reach 1");
                        }
                    }
                }
                *alpha
            }
            Family::GapDensity { ratio, alpha } => {
                if !(ratio.is_finite() && *ratio >= 10.0) {
                    return bad("gap density ratio must be ≥ 10");
                }
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return bad("gap density alpha must lie in (0, 1)");
                }
                (1.0 - alpha) * ratio
            }
            Family::HeavyTail { beta } => {
                if !(*beta > 0.0 && *beta < 1.0) {
                    return bad("heavy tail exponent must lie in (0, 1)");
                }
                1.0 + beta
            }
            Family::Tabulated { knots } => {
                check_knots(knots, "density")?;
                knots.iter().map(|k| k[1]).fold(0.0, f64::max)
            }
        };
        Ok(Self { family, bound })
    }

    pub fn constant(a: f64) -> Result<Self> {
        Self::new(Family::Constant { a })
    }

    pub fn travelling_wave(v: f64) -> Result<Self> {
        Self::new(Family::TravellingWave { v })
    }

    pub fn gap_density(ratio: f64, alpha: f64) -> Result<Self> {
        Self::new(Family::GapDensity { ratio, alpha })
    }

    pub fn heavy_tail(beta: f64) -> Result<Self> {
        Self::new(Family::HeavyTail { beta })
    }

    pub fn scaled_exponential(alpha: f64, rate: f64) -> Result<Self> {
        Self::new(Family::ScaledCdf { alpha, cdf: Cdf::Exponential { rate } })
    }

    pub fn tabulated(knots: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(Family::Tabulated { knots })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Supremum of `g`, the thinning majorant.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `g(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::domain(format!("intensity evaluated at {x} < 0")));
        }
        Ok(self.value(x))
    }

    /// `G(x) = ∫₀ˣ g`.
    pub fn cumulative(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::domain(format!("cumulative evaluated at {x} < 0")));
        }
        Ok(self.mass(x))
    }

    /// `g(x)` without the domain check; callers guarantee `x ≥ 0`.
    pub fn value(&self, x: f64) -> f64 {
        match &self.family {
            Family::Constant { a } => *a,
            Family::TravellingWave { v } => -(-v * x).exp_m1(),
            Family::ScaledCdf { alpha, cdf } => match cdf {
                Cdf::Exponential { rate } => -alpha * (-rate * x).exp_m1(),
                Cdf::Tabulated { knots } => alpha * knots[knot_index(knots, x)][1],
            },
            Family::GapDensity { ratio, alpha } => {
                let mut i = 0;
                while gap_edge(*ratio, i) <= x {
                    i += 1;
                }
                // i edges at or left of x; odd count means a dense band
                if i % 2 == 1 {
                    (1.0 - alpha) * ratio
                } else {
                    0.0
                }
            }
            Family::HeavyTail { beta } => {
                if x < 1.0 {
                    0.0
                } else {
                    1.0 + beta * x.powf(-beta - 1.0)
                }
            }
            Family::Tabulated { knots } => knots[knot_index(knots, x)][1],
        }
    }

    /// `G(x)` without the domain check.
    pub fn mass(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match &self.family {
            Family::Constant { a } => a * x,
            Family::TravellingWave { v } => smooth_ramp_mass(*v, x),
            Family::ScaledCdf { alpha, cdf } => match cdf {
                Cdf::Exponential { rate } => alpha * smooth_ramp_mass(*rate, x),
                Cdf::Tabulated { knots } => alpha * step_mass(knots, x),
            },
            Family::GapDensity { ratio, alpha } => {
                let level = (1.0 - alpha) * ratio;
                let mut m = 0.0;
                let mut i = 0;
                loop {
                    let lo = gap_edge(*ratio, i);
                    if lo >= x {
                        break;
                    }
                    let hi = gap_edge(*ratio, i + 1);
                    m += level * (hi.min(x) - lo);
                    i += 2;
                }
                m
            }
            Family::HeavyTail { beta } => {
                if x < 1.0 {
                    0.0
                } else {
                    x - x.powf(-beta)
                }
            }
            Family::Tabulated { knots } => step_mass(knots, x),
        }
    }

    /// Limit of `g` at infinity when it exists.
    pub fn tail_level(&self) -> Option<f64> {
        match &self.family {
            Family::Constant { a } => Some(*a),
            Family::TravellingWave { .. } => Some(1.0),
            Family::ScaledCdf { alpha, .. } => Some(*alpha),
            Family::GapDensity { .. } => None,
            Family::HeavyTail { .. } => Some(1.0),
            Family::Tabulated { knots } => knots.last().map(|k| k[1]),
        }
    }

    /// `∫₀^∞ (1 − g)` when it converges absolutely.
    pub fn deficit_integral(&self) -> Option<f64> {
        match &self.family {
            Family::Constant { a } if *a == 1.0 => Some(0.0),
            Family::TravellingWave { v } => Some(1.0 / v),
            Family::ScaledCdf { alpha, cdf } if *alpha == 1.0 => match cdf {
                Cdf::Exponential { rate } => Some(1.0 / rate),
                Cdf::Tabulated { knots } => {
                    let end = knots.last().unwrap()[0];
                    Some(end - step_mass(knots, end))
                }
            },
            Family::Tabulated { knots } if knots.last().unwrap()[1] == 1.0 => {
                let end = knots.last().unwrap()[0];
                Some(end - step_mass(knots, end))
            }
            _ => None,
        }
    }

    /// `∫₀^∞ (1 − g(x)) e^{−λx} dx`.
    pub fn laplace_deficit(&self, lambda: f64) -> f64 {
        let l = lambda;
        match &self.family {
            Family::Constant { a } => (1.0 - a) / l,
            Family::TravellingWave { v } => 1.0 / (l + v),
            Family::ScaledCdf { alpha, cdf } => match cdf {
                Cdf::Exponential { rate } => (1.0 - alpha) / l + alpha / (l + rate),
                Cdf::Tabulated { knots } => 1.0 / l - alpha * step_laplace(knots, l),
            },
            Family::GapDensity { ratio, alpha } => {
                let level = (1.0 - alpha) * ratio;
                let mut s = 0.0;
                let mut i = 0;
                loop {
                    let lo = gap_edge(*ratio, i);
                    let elo = (-l * lo).exp();
                    if elo == 0.0 {
                        break;
                    }
                    let ehi = (-l * gap_edge(*ratio, i + 1)).exp();
                    s += level * (elo - ehi) / l;
                    i += 2;
                }
                1.0 / l - s
            }
            Family::HeavyTail { beta } => {
                let b = *beta;
                -(-l).exp_m1() / l - (-l).exp() + l.powf(b) * upper_gamma(1.0 - b, l)
            }
            Family::Tabulated { knots } => 1.0 / l - step_laplace(knots, l),
        }
    }

    /// Points where `g` jumps, up to `x_max`.
    pub fn breakpoints(&self, x_max: f64) -> Vec<f64> {
        match &self.family {
            Family::GapDensity { ratio, .. } => {
                let mut v = Vec::new();
                let mut i = 0;
                while gap_edge(*ratio, i) <= x_max {
                    v.push(gap_edge(*ratio, i));
                    i += 1;
                }
                v
            }
            Family::HeavyTail { .. } => {
                if x_max >= 1.0 {
                    vec![1.0]
                } else {
                    vec![]
                }
            }
            Family::Tabulated { knots } | Family::ScaledCdf { cdf: Cdf::Tabulated { knots }, .. } => {
                knots.iter().map(|k| k[0]).filter(|&x| x > 0.0 && x <= x_max).collect()
            }
            _ => vec![],
        }
    }
}

// ∫₀ˣ (1 − e^{−r y}) dy, with a series where the closed form cancels
fn smooth_ramp_mass(r: f64, x: f64) -> f64 {
    let z = r * x;
    if z < 1e-3 {
        x * z * (0.5 - z * (1.0 / 6.0 - z * (1.0 / 24.0 - z / 120.0)))
    } else {
        x + (-z).exp_m1() / r
    }
}

/// Grid used by [`check_conditions`] and [`blowup_criterion`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scan {
    pub x_max: f64,
    pub step: f64,
    /// Decreasing λ values for the small-λ trend.
    pub lambdas: Vec<f64>,
}

impl Default for Scan {
    fn default() -> Self {
        Self {
            x_max: 2e4,
            step: 0.25,
            lambdas: (0..=8).map(|i| 10f64.powf(-0.5 * i as f64)).collect(),
        }
    }
}

impl Scan {
    pub fn new(x_max: f64, step: f64) -> Self {
        Self { x_max, step, ..Self::default() }
    }

    fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let n = (self.x_max / self.step).floor() as usize;
        (1..=n).map(move |j| j as f64 * self.step)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub holds: bool,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftCheck {
    pub holds: bool,
    pub witness: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeficitCheck {
    pub verdict: Verdict,
    /// `(x_n, y_n)` with `∫₀^{x_n}(g − 1) ≤ −y_n`.
    pub witnesses: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceTrend {
    /// Heuristic: the condition is a limsup and only a trend is observed.
    pub verdict: Verdict,
    /// `(λ, λ⁻¹∫(1 − g)e^{−λx})` for each scanned λ.
    pub values: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakCheck {
    pub holds: bool,
    pub eps: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupWitness {
    /// Smallest grid `x` with `G(x) > 2x`.
    pub x: f64,
    /// Grid intervals where `g > 0` and `G > 2x`.
    pub set: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Bounded intensity.
    pub a1: BoundCheck,
    /// Eventually more room than mass: some `x*` with `∫₀^{x*}(g−1) < 0` and no later recovery.
    pub a2: DriftCheck,
    /// Unbounded mass deficit along a sequence.
    pub a3: DeficitCheck,
    /// Small-λ blow-up of the Laplace functional.
    pub a4: LaplaceTrend,
    /// Weak feedback: `g ≤ 1` and `g < 1` near the origin.
    pub w: WeakCheck,
    pub blowup: Option<BlowupWitness>,
}

/// Decides every structural condition on a grid scan.
pub fn check_conditions(spec: &IntensitySpec, scan: &Scan) -> ConditionReport {
    let xs: Vec<f64> = scan.points().collect();
    let h: Vec<f64> = xs.iter().map(|&x| spec.mass(x) - x).collect();
    let n = xs.len();

    let a1 = BoundCheck {
        holds: spec.bound().is_finite(),
        bound: spec.bound(),
    };

    // (A2): first x* with H(x*) < 0 that no later grid point exceeds
    let mut suffix = vec![f64::NEG_INFINITY; n + 1];
    for j in (0..n).rev() {
        suffix[j] = suffix[j + 1].max(h[j]);
    }
    let witness = (0..n)
        .find(|&j| h[j] < 0.0 && h[j] >= suffix[j] - 1e-12 * (1.0 + h[j].abs()))
        .map(|j| xs[j]);
    let a2 = DriftCheck { holds: witness.is_some(), witness };

    let a3 = deficit_sequence(&xs, &h);

    let mut values = Vec::new();
    let mut lambdas = scan.lambdas.clone();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    for &l in &lambdas {
        values.push((l, spec.laplace_deficit(l) / l));
    }
    let a4 = LaplaceTrend {
        verdict: laplace_trend(&values),
        values,
    };

    let mut eps = None;
    let mut all_le_one = spec.value(0.0) <= 1.0;
    let mut running_max = spec.value(0.0);
    if running_max < 1.0 {
        eps = Some(0.0);
    }
    for &x in &xs {
        let g = spec.value(x);
        all_le_one &= g <= 1.0;
        running_max = running_max.max(g);
        if running_max < 1.0 {
            eps = Some(x);
        }
    }
    let w = WeakCheck {
        holds: all_le_one && eps.is_some_and(|e| e > 0.0),
        eps: eps.filter(|&e| e > 0.0),
    };

    ConditionReport {
        a1,
        a2,
        a3,
        a4,
        w,
        blowup: blowup_criterion(spec, scan),
    }
}

fn deficit_sequence(xs: &[f64], h: &[f64]) -> DeficitCheck {
    let n = xs.len();
    if n < 4 {
        return DeficitCheck { verdict: Verdict::Indeterminate, witnesses: vec![] };
    }
    // record-setting local minima of H
    let mut best = 0.0;
    let mut records = Vec::new();
    for j in 0..n {
        let left_higher = j == 0 || h[j - 1] > h[j];
        let right_not_lower = j + 1 == n || h[j + 1] >= h[j];
        if left_higher && right_not_lower && h[j] < best {
            best = h[j];
            records.push((xs[j], -h[j]));
        }
    }
    if records.len() >= 2 && records.last().unwrap().1 >= 2.0 * records[0].1 {
        return DeficitCheck { verdict: Verdict::Holds, witnesses: records };
    }
    // steadily decreasing H: compare at quarter, half and full window
    let (q, m, e) = (h[n / 4], h[n / 2], h[n - 1]);
    if q < 0.0 && m <= 1.5 * q && e <= 1.5 * m {
        let w = vec![(xs[n / 4], -q), (xs[n / 2], -m), (xs[n - 1], -e)];
        return DeficitCheck { verdict: Verdict::Holds, witnesses: w };
    }
    if h.iter().all(|&v| v >= 0.0) && e > m {
        return DeficitCheck { verdict: Verdict::Fails, witnesses: vec![] };
    }
    DeficitCheck { verdict: Verdict::Indeterminate, witnesses: records }
}

fn laplace_trend(values: &[(f64, f64)]) -> Verdict {
    if values.len() < 3 {
        return Verdict::Indeterminate;
    }
    let tail = &values[values.len() / 2..];
    let last = tail.last().unwrap().1;
    let first = tail[0].1;
    let increasing = tail.windows(2).all(|w| w[1].1 > w[0].1);
    if last > 0.0 && increasing && last >= 2.0 * first.max(0.0) {
        Verdict::Holds
    } else if last <= 0.0 || tail.windows(2).all(|w| w[1].1 <= w[0].1) {
        Verdict::Fails
    } else {
        Verdict::Indeterminate
    }
}

/// Smallest grid `x` with `G(x) > 2x`; its presence rules out a continuous
/// free boundary.
pub fn blowup_criterion(spec: &IntensitySpec, scan: &Scan) -> Option<BlowupWitness> {
    let mut first = None;
    let mut set: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    let mut prev = 0.0;
    for x in scan.points() {
        let fires = spec.mass(x) > 2.0 * x;
        if fires && first.is_none() {
            first = Some(x);
        }
        let member = fires && spec.value(x) > 0.0;
        match (member, open) {
            (true, None) => open = Some(x),
            (false, Some(s)) => {
                set.push((s, prev));
                open = None;
            }
            _ => {}
        }
        prev = x;
    }
    if let Some(s) = open {
        set.push((s, prev));
    }
    first.map(|x| BlowupWitness { x, set })
}

/// Composite Simpson reference for `G`, splitting at the jumps of `g`.
pub fn cumulative_by_quadrature(spec: &IntensitySpec, x: f64) -> f64 {
    let mut cuts = vec![0.0];
    cuts.extend(spec.breakpoints(x).into_iter().filter(|&b| b < x));
    cuts.push(x);
    cuts.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            // evaluate just inside each piece so right-continuity does not leak
            let eps = (b - a) * 1e-12;
            let f = |y: f64| spec.value(y.clamp(a + eps, b - eps));
            integrate(&f, a, b, 1e-13 * (1.0 + b - a))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let c = IntensitySpec::constant(0.5).unwrap();
        assert_eq!(c.eval(7.3).unwrap(), 0.5);
        let gap = IntensitySpec::gap_density(10.0, 0.25).unwrap();
        assert_eq!(gap.eval(0.5).unwrap(), 0.0);
        assert_eq!(gap.eval(5.0).unwrap(), 7.5);
        assert_eq!(gap.eval(50.0).unwrap(), 0.0);
        assert_eq!(gap.eval(500.0).unwrap(), 7.5);
        assert!(c.eval(-0.1).is_err());
        assert!(c.cumulative(-1.0).is_err());
    }

    #[test]
    fn cumulative_examples() {
        let c = IntensitySpec::constant(0.5).unwrap();
        assert_eq!(c.cumulative(2.0).unwrap(), 1.0);
        let gap = IntensitySpec::gap_density(10.0, 0.25).unwrap();
        assert_eq!(gap.cumulative(11.0).unwrap(), 75.0);
        let tw = IntensitySpec::travelling_wave(1.0).unwrap();
        assert_eq!(tw.deficit_integral(), Some(1.0));
        let x = 60.0;
        assert!((x - tw.mass(x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gap_edges_and_band_inequalities() {
        let l = 10.0;
        let edges: Vec<f64> = (-1..5).map(|i| gap_edge(l, i)).collect();
        assert_eq!(edges, vec![0.0, 1.0, 11.0, 111.0, 1111.0, 11111.0]);
        let gap = IntensitySpec::gap_density(l, 0.25).unwrap();
        for i in 0..=6 {
            let x = gap_edge(l, i);
            let m = gap.mass(x);
            if i % 2 == 1 {
                assert!(m >= l * x / 2.0, "i={i}");
            } else {
                assert!(m <= 0.75 * x, "i={i}");
            }
        }
    }

    #[test]
    fn heavy_tail_transform() {
        let b = 0.5;
        let spec = IntensitySpec::heavy_tail(b).unwrap();
        assert_eq!(spec.bound(), 1.5);
        // transform of 1 − g behaves like Γ(1−β)λ^β near 0
        for &l in &[1e-4, 1e-6] {
            let got = spec.laplace_deficit(l);
            let lead = libm::tgamma(1.0 - b) * l.powf(b);
            assert!(((got - lead) / l).abs() < 5.0, "λ={l}");
        }
        // and agrees with direct quadrature at moderate λ
        let l = 0.7;
        let direct = integrate(&|x: f64| (-l * x).exp(), 0.0, 1.0, 1e-14)
            - integrate(&|u: f64| if u <= 0.0 { 0.0 } else { b * u.powf(b - 1.0) * (-l / u).exp() }, 0.0, 1.0, 1e-14);
        assert!((spec.laplace_deficit(l) - direct).abs() < 1e-9);
    }

    #[test]
    fn laplace_against_quadrature() {
        let specs = vec![
            IntensitySpec::constant(0.3).unwrap(),
            IntensitySpec::travelling_wave(2.0).unwrap(),
            IntensitySpec::scaled_exponential(0.8, 1.5).unwrap(),
            IntensitySpec::tabulated(vec![[0.0, 0.2], [1.0, 0.9], [3.0, 0.4]]).unwrap(),
            IntensitySpec::gap_density(10.0, 0.25).unwrap(),
        ];
        let l = 0.9;
        for s in specs {
            let mut cuts = vec![0.0];
            cuts.extend(s.breakpoints(80.0));
            cuts.push(80.0);
            let q: f64 = cuts
                .windows(2)
                .map(|w| {
                    let (a, b) = (w[0], w[1]);
                    let e = (b - a) * 1e-12;
                    integrate(&|y: f64| (1.0 - s.value(y.clamp(a + e, b - e))) * (-l * y).exp(), a, b, 1e-14)
                })
                .sum();
            let tail = (-l * 80.0f64).exp() / l * (1.0 - s.value(80.0));
            assert!((s.laplace_deficit(l) - q - tail).abs() < 1e-8, "{:?}", s.family());
        }
    }

    #[test]
    fn truth_table() {
        let scan = Scan::new(2e4, 1.0);
        let r = check_conditions(&IntensitySpec::constant(0.5).unwrap(), &scan);
        assert!(r.a1.holds && r.a1.bound == 0.5);
        assert!(r.a2.holds && r.a2.witness == Some(1.0));
        assert!(r.w.holds);
        assert_eq!(r.a3.verdict, Verdict::Holds);
        assert_eq!(r.a4.verdict, Verdict::Holds);
        assert!(r.blowup.is_none());

        let r = check_conditions(&IntensitySpec::constant(1.5).unwrap(), &scan);
        assert!(!r.a2.holds);
        assert!(!r.w.holds);

        let r = check_conditions(&IntensitySpec::gap_density(10.0, 0.25).unwrap(), &scan);
        assert_eq!(r.a3.verdict, Verdict::Holds);
        let xs: Vec<f64> = r.a3.witnesses.iter().map(|w| w.0).collect();
        assert_eq!(xs, vec![1.0, 111.0, 11111.0]);
        assert!(!r.a2.holds);

        let b = blowup_criterion(&IntensitySpec::constant(3.0).unwrap(), &scan).unwrap();
        assert_eq!(b.x, 1.0);

        let tw = check_conditions(&IntensitySpec::travelling_wave(1.0).unwrap(), &scan);
        assert!(tw.a2.holds && tw.w.holds);
        assert_ne!(tw.a3.verdict, Verdict::Holds);
        assert_eq!(tw.a4.verdict, Verdict::Holds);

        let one = check_conditions(&IntensitySpec::constant(1.0).unwrap(), &scan);
        assert!(!one.a2.holds);
        assert_eq!(one.a4.verdict, Verdict::Fails);
    }

    #[test]
    fn scaled_cdf_blowup_witness() {
        let s = IntensitySpec::scaled_exponential(3.0, 1.0).unwrap();
        let w = blowup_criterion(&s, &Scan::new(10.0, 0.01)).unwrap();
        assert!(w.x > 0.0 && w.x <= 5.0);
        assert!(s.mass(w.x) > 2.0 * w.x);
        assert!(s.mass(w.x - 0.01) <= 2.0 * (w.x - 0.01));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(IntensitySpec::constant(-1.0).is_err());
        assert!(IntensitySpec::gap_density(5.0, 0.25).is_err());
        assert!(IntensitySpec::heavy_tail(1.0).is_err());
        assert!(IntensitySpec::tabulated(vec![[0.5, 1.0]]).is_err());
        assert!(IntensitySpec::tabulated(vec![[0.0, 1.0], [0.0, 2.0]]).is_err());
        let bad_cdf = Family::ScaledCdf {
            alpha: 1.0,
            cdf: Cdf::Tabulated { knots: vec![[0.0, 0.5], [1.0, 0.4]] },
        };
        assert!(IntensitySpec::new(bad_cdf).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let s = IntensitySpec::scaled_exponential(2.0, 1.0).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"family":"scaled_cdf","alpha":2.0,"cdf":{"kind":"exponential","rate":1.0}}"#);
        let back: IntensitySpec = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<IntensitySpec>(r#"{"family":"constant","a":0.5,"b":1}"#).is_err());
        assert!(serde_json::from_str::<IntensitySpec>(r#"{"family":"constant","a":-0.5}"#).is_err());
    }
}
