//! Replicated studies.
//!
//! Each study is a pure function of its configuration: replicas fan out over
//! the rayon pool and are gathered back in index order, so the summary is
//! the same whatever the worker count. Pass/fail thresholds live in the
//! configuration (defaults in `defaults.toml`) and are never derived from
//! the data being judged.

mod critical_case;
mod gap;
mod polynomial;
mod rate;
mod similarity;

pub use critical_case::{exp_critical, r_samples, rescaled_barrier, CriticalConfig, CriticalThresholds};
pub use gap::{empty_band, exp_gap_density, GapConfig, GapThresholds};
pub use polynomial::{exp_polynomial, PolynomialConfig, PolynomialThresholds};
pub use rate::{exp_rate, sup_error, RateConfig, RateThresholds, ReferenceSolve};
pub use similarity::{exp_similarity, SimilarityConfig, SimilarityThresholds};

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::SeedSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// One number from one replica. `group` names the setting it belongs to,
/// e.g. `N=1000`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub group: String,
    pub replica: u64,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Indeterminate,
}

/// A statistic held against a threshold. `passed` is `None` when the
/// statistic could not be formed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub rule: String,
    pub passed: Option<bool>,
}

impl Check {
    pub fn new(name: &str, value: f64, rule: impl Into<String>, passed: bool) -> Self {
        let value = finite(value);
        Self { name: name.into(), value, rule: rule.into(), passed: value.map(|_| passed) }
    }

    pub fn undecided(name: &str, rule: impl Into<String>) -> Self {
        Self { name: name.into(), value: None, rule: rule.into(), passed: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema_version: u32,
    pub id: String,
    pub config: serde_json::Value,
    pub seed: SeedSpec,
    pub replicas: usize,
    /// Written to CSV rather than into the JSON summary.
    #[serde(skip)]
    pub records: Vec<Record>,
    /// Non-finite statistics are stored as `null`.
    pub stats: BTreeMap<String, Option<f64>>,
    pub checks: Vec<Check>,
    pub outcome: Outcome,
}

impl ExperimentSummary {
    pub(crate) fn new(id: &str, config: &impl Serialize, seed: SeedSpec, replicas: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            id: id.into(),
            config: serde_json::to_value(config).expect("configs serialize"),
            seed,
            replicas,
            records: Vec::new(),
            stats: BTreeMap::new(),
            checks: Vec::new(),
            outcome: Outcome::Indeterminate,
        }
    }

    pub(crate) fn stat(&mut self, name: impl Into<String>, value: f64) {
        self.stats.insert(name.into(), finite(value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.stats.get(name).copied().flatten()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Any failed check fails the study; otherwise any undecided check, or
    /// having none, leaves it indeterminate.
    pub(crate) fn conclude(mut self) -> Self {
        self.outcome = if self.checks.iter().any(|c| c.passed == Some(false)) {
            Outcome::Fail
        } else if self.checks.is_empty() || self.checks.iter().any(|c| c.passed.is_none()) {
            Outcome::Indeterminate
        } else {
            Outcome::Pass
        };
        self
    }

    /// The records of one group, in replica order.
    pub fn group(&self, group: &str) -> Vec<f64> {
        self.records.iter().filter(|r| r.group == group).map(|r| r.value).collect()
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`. Infinite
/// values are allowed (censored samples); NaN is not.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("KS distance needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::domain("KS distance: NaN in sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Replica seeds for group `g`; groups never share a stream.
pub(crate) fn replica_seed(seed: SeedSpec, group: usize, replica: u64) -> SeedSpec {
    seed.replica(((group as u64) << 32) | replica)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct Defaults {
    pub similarity: SimilarityThresholds,
    pub rate: RateThresholds,
    pub critical: CriticalThresholds,
    pub gap: GapThresholds,
    pub polynomial: PolynomialThresholds,
}

pub(crate) fn defaults() -> &'static Defaults {
    static CELL: OnceLock<Defaults> = OnceLock::new();
    CELL.get_or_init(|| toml::from_str(include_str!("defaults.toml")).expect("defaults.toml parses"))
}

pub const EXPERIMENT_IDS: [&str; 5] = ["similarity", "rate", "critical", "gap", "polynomial"];

/// Any study's configuration, tagged by its id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Similarity(SimilarityConfig),
    Rate(RateConfig),
    Critical(CriticalConfig),
    Gap(GapConfig),
    Polynomial(PolynomialConfig),
}

impl ExperimentConfig {
    /// The default configuration of study `id`.
    pub fn default_for(id: &str, seed: SeedSpec) -> Result<Self> {
        Ok(match id {
            "similarity" => Self::Similarity(SimilarityConfig::new(seed)),
            "rate" => Self::Rate(RateConfig::new(seed)),
            "critical" => Self::Critical(CriticalConfig::new(seed)),
            "gap" => Self::Gap(GapConfig::new(seed)),
            "polynomial" => Self::Polynomial(PolynomialConfig::new(seed)),
            other => {
                return Err(Error::config(format!(
                    "unknown experiment {other:?}; expected one of {}",
                    EXPERIMENT_IDS.join(", ")
                )))
            }
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::Similarity(_) => "similarity",
            Self::Rate(_) => "rate",
            Self::Critical(_) => "critical",
            Self::Gap(_) => "gap",
            Self::Polynomial(_) => "polynomial",
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    match cfg {
        ExperimentConfig::Similarity(c) => exp_similarity(c),
        ExperimentConfig::Rate(c) => exp_rate(c),
        ExperimentConfig::Critical(c) => exp_critical(c),
        ExperimentConfig::Gap(c) => exp_gap_density(c),
        ExperimentConfig::Polynomial(c) => exp_polynomial(c),
    }
}
