//! Seed-addressable random streams and Poisson clouds of initial particles.
//!
//! Every stream is keyed by `(root, replica, purpose, index)`. Clouds are
//! generated cell by cell on unit cells `[j, j+1)`, each cell with its own
//! stream, so growing a window later reproduces exactly the points a larger
//! window would have had from the start.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::densities::IntensitySpec;
use crate::error::{Error, Result};

/// What a stream is used for; distinct purposes never share randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Cloud,
    Motion,
    Paths,
    SpacePath,
    Oracle,
    Custom(u64),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Cloud => 1,
            Purpose::Motion => 2,
            Purpose::Paths => 3,
            Purpose::SpacePath => 4,
            Purpose::Oracle => 5,
            Purpose::Custom(x) => 0x1000 ^ x.rotate_left(17),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub root: u64,
    #[serde(default)]
    pub replica: u64,
    #[serde(default = "default_purpose")]
    pub purpose: Purpose,
}

fn default_purpose() -> Purpose {
    Purpose::Cloud
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(root: u64) -> Self {
        Self { root, replica: 0, purpose: Purpose::Cloud }
    }

    pub fn replica(self, replica: u64) -> Self {
        Self { replica, ..self }
    }

    pub fn purpose(self, purpose: Purpose) -> Self {
        Self { purpose, ..self }
    }

    fn key(&self, index: u64) -> [u8; 32] {
        let h0 = splitmix(self.root);
        let h1 = splitmix(h0 ^ self.replica);
        let h2 = splitmix(h1 ^ self.purpose.tag());
        let h3 = splitmix(h2 ^ index);
        let mut out = [0u8; 32];
        for (i, w) in [h3, splitmix(h3 ^ 1), splitmix(h3 ^ 2), splitmix(h3 ^ 3)].iter().enumerate() {
            out[8 * i..8 * i + 8].copy_from_slice(&w.to_le_bytes());
        }
        out
    }

    /// The main stream of this `(replica, purpose)`.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key(u64::MAX))
    }

    /// An independent sub-stream, addressed by `index`.
    pub fn substream(&self, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key(index))
    }
}

/// Sorted initial positions on `[0, window]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<f64>,
    pub window: f64,
    pub rate_scale: f64,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points in `[lo, hi]`.
    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        let a = self.points.partition_point(|&x| x < lo);
        let b = self.points.partition_point(|&x| x <= hi);
        b.saturating_sub(a)
    }
}

// all points of cell j, thinned, sorted
fn cell_points(spec: &IntensitySpec, n: f64, j: u64, seed: &SeedSpec) -> Vec<f64> {
    let c = spec.bound();
    let rate = n * c;
    if rate <= 0.0 {
        return Vec::new();
    }
    let mut rng = seed.substream(j);
    let count = Poisson::new(rate).map(|p| p.sample(&mut rng)).unwrap_or(0.0) as usize;
    let mut pts = Vec::with_capacity(count);
    for _ in 0..count {
        let x = j as f64 + rng.random::<f64>();
        let v: f64 = rng.random();
        if v * c < spec.value(x) {
            pts.push(x);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts
}

/// Points of the Poisson process with intensity `n·g` in `(lo, hi]`
/// (`[0, hi]` when `lo = 0`).
pub fn points_between(spec: &IntensitySpec, n: f64, lo: f64, hi: f64, seed: &SeedSpec) -> Vec<f64> {
    let mut out = Vec::new();
    if hi <= lo {
        return out;
    }
    let first = lo.floor().max(0.0) as u64;
    let last = hi.ceil() as u64;
    for j in first..last {
        for x in cell_points(spec, n, j, seed) {
            let inside = if lo == 0.0 { x <= hi } else { x > lo && x <= hi };
            if inside {
                out.push(x);
            }
        }
    }
    out
}

/// Poisson cloud with intensity `n·g` on `[0, window]`, by thinning from the
/// homogeneous rate `n·sup g`.
pub fn sample_ppp(spec: &IntensitySpec, n: f64, window: f64, seed: &SeedSpec) -> Result<PointCloud> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::domain(format!("window must be positive and finite, got {window}")));
    }
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::domain(format!("rate scale must be positive, got {n}")));
    }
    Ok(PointCloud {
        points: points_between(spec, n, 0.0, window, seed),
        window,
        rate_scale: n,
    })
}

/// Grows the window to `new_window`, sampling only the new region.
pub fn extend_window(cloud: &PointCloud, spec: &IntensitySpec, new_window: f64, seed: &SeedSpec) -> Result<PointCloud> {
    if new_window < cloud.window {
        return Err(Error::domain(format!(
            "cannot shrink window from {} to {new_window}",
            cloud.window
        )));
    }
    let mut out = cloud.clone();
    out.points
        .extend(points_between(spec, cloud.rate_scale, cloud.window, new_window, seed));
    out.window = new_window;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = SeedSpec::new(7);
        let a: u64 = s.rng().random();
        let b: u64 = s.rng().random();
        assert_eq!(a, b);
        let c: u64 = s.replica(1).rng().random();
        let d: u64 = s.purpose(Purpose::Motion).rng().random();
        let e: u64 = s.substream(0).random();
        assert!(a != c && a != d && a != e && c != d);
    }

    #[test]
    fn same_seed_same_cloud() {
        let g = IntensitySpec::constant(1.0).unwrap();
        let s = SeedSpec::new(1);
        let a = sample_ppp(&g, 100.0, 5.5, &s).unwrap();
        let b = sample_ppp(&g, 100.0, 5.5, &s).unwrap();
        assert_eq!(a, b);
        assert!(a.points.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.points.iter().all(|&x| (0.0..=5.5).contains(&x)));
    }

    #[test]
    fn extension_matches_one_shot() {
        let g = IntensitySpec::travelling_wave(1.0).unwrap();
        let s = SeedSpec::new(9);
        let base = sample_ppp(&g, 50.0, 2.3, &s).unwrap();
        let twice = extend_window(&extend_window(&base, &g, 4.1, &s).unwrap(), &g, 7.7, &s).unwrap();
        let once = extend_window(&base, &g, 7.7, &s).unwrap();
        let direct = sample_ppp(&g, 50.0, 7.7, &s).unwrap();
        assert_eq!(twice, once);
        assert_eq!(once.points, direct.points);
        assert_eq!(extend_window(&base, &g, 2.3, &s).unwrap(), base);
        assert!(extend_window(&base, &g, 2.0, &s).is_err());
    }

    #[test]
    fn empty_for_zero_bound_and_gap_region() {
        let z = IntensitySpec::constant(0.0).unwrap();
        assert!(sample_ppp(&z, 10.0, 3.0, &SeedSpec::new(2)).unwrap().is_empty());
        let gap = IntensitySpec::gap_density(10.0, 0.25).unwrap();
        for r in 0..5 {
            let c = sample_ppp(&gap, 2.0, 120.0, &SeedSpec::new(3).replica(r)).unwrap();
            assert_eq!(c.count_in(11.000_001, 110.999_999), 0);
            assert!(c.count_in(1.0, 11.0) > 0);
        }
    }

    #[test]
    fn poisson_mean_count() {
        let g = IntensitySpec::constant(1.0).unwrap();
        let reps = 200;
        let total: usize = (0..reps)
            .map(|r| sample_ppp(&g, 1000.0, 1.0, &SeedSpec::new(4).replica(r)).unwrap().len())
            .sum();
        let mean = total as f64 / reps as f64;
        assert!((mean - 1000.0).abs() < 3.0 * (1000.0f64 / reps as f64).sqrt());
    }
}
