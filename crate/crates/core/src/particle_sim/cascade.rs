use crate::error::{Error, Result};

/// Smallest `k ≥ 1` with at most `k` particles in `[b, b + k·a]`.
///
/// `sorted` holds the alive positions in ascending order; at least one must
/// sit exactly at `b` (the particle that triggered the cascade). At the
/// returned `k` the interval holds exactly `k` particles, which are the ones
/// absorbed.
pub fn resolve_cascade(sorted: &[f64], b: f64, a: f64) -> Result<usize> {
    let start = sorted.partition_point(|&x| x < b);
    if sorted.get(start) != Some(&b) {
        return Err(Error::domain("cascade needs a particle exactly at the barrier"));
    }
    let mut k = 1usize;
    loop {
        let top = b + k as f64 * a;
        let count = sorted[start..].partition_point(|&x| x <= top);
        if count <= k {
            return Ok(k);
        }
        // no k' in (k, count) can work: the interval only grows
        k = count;
    }
}

/// Direct scan over `k = 1, 2, …` with fresh interval counts.
pub fn resolve_cascade_brute(positions: &[f64], b: f64, a: f64) -> usize {
    let mut k = 1usize;
    loop {
        let top = b + k as f64 * a;
        let count = positions.iter().filter(|&&x| x >= b && x <= top).count();
        if count <= k {
            return k;
        }
        k += 1;
    }
}
