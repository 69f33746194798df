//! First time a barrier runs away.

use super::{GridFunction, SolveReport};
use crate::particle_sim::{EventLog, Terminal};

pub enum BarrierSource<'a> {
    MeanField { solution: &'a GridFunction, report: &'a SolveReport },
    Particles(&'a EventLog),
}

/// First time the barrier passes `cap`, or the time the run itself flagged
/// as an explosion, whichever comes first.
pub fn detect_explosion(source: BarrierSource<'_>, cap: f64) -> Option<f64> {
    match source {
        BarrierSource::MeanField { solution, report } => {
            let crossed = solution.rows().find(|&(_, v)| v > cap).map(|(t, _)| t);
            min_opt(report.exploded, crossed)
        }
        BarrierSource::Particles(log) => {
            let flagged = match log.terminal {
                Terminal::Exploded { time } => Some(time),
                Terminal::Completed => None,
            };
            let crossed = log.rows().into_iter().find(|r| r.4 > cap).map(|r| r.1);
            min_opt(flagged, crossed)
        }
    }
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}
