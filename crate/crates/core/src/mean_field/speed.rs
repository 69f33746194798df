//! Long-time growth of the free boundary.

use serde::{Deserialize, Serialize};

use crate::closed_form::k_alpha;
use crate::densities::IntensitySpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", content = "constant", rename_all = "snake_case")]
pub enum Speed {
    /// `Λ_t / t → K`.
    Linear(f64),
    /// `Λ_t / √t → K`.
    Sqrt(f64),
    NotApplicable,
}

/// `Linear(1/(2∫(1−g)))` when the deficit integral is finite and positive,
/// `Sqrt(K_a)` when `g → a < 1`, otherwise not applicable.
///
/// The linear constant is the one the travelling wave `1 − e^{−vx}` pins
/// down: deficit `1/v`, speed `v/2`.
pub fn asymptotic_speed(g: &IntensitySpec) -> Speed {
    if let Some(i) = g.deficit_integral() {
        if i > 0.0 && i.is_finite() {
            return Speed::Linear(0.5 / i);
        }
    }
    match g.tail_level() {
        Some(a) if a == 0.0 => Speed::Sqrt(0.0),
        Some(a) if a > 0.0 && a < 1.0 => k_alpha(a).map_or(Speed::NotApplicable, Speed::Sqrt),
        _ => Speed::NotApplicable,
    }
}
