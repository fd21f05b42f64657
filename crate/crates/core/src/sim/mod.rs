//! Monte Carlo simulation of events and patrolling robots.
//!
//! Two simulators live here and neither calls into [`crate::analytic`]:
//!
//! - [`simulate_patrol`] is a discrete-event simulation of robots driving a
//!   tour at constant speed over a list of concrete events, keeping the
//!   shared detection database exactly as the robots would.
//! - [`simulate_conditioned_cycle`] samples single true events under the
//!   idealized model (uniform arrival within one visit gap, duration
//!   conditioned to exceed `T`) and checks them against the visit grid.

mod conditioned;
mod events;
mod patrol;
mod rng;

pub use conditioned::{simulate_conditioned_cycle, ConditionedEstimate, VisitGrid};
pub use events::{generate_events, Event, EventSet};
pub use patrol::{
    estimate_confirm_prob, simulate_patrol, simulate_specialized, EventOutcome, PatrolConfig,
    PatrolRun, RobotFleet,
};
pub use rng::substream;

use serde::{Deserialize, Serialize};

/// Half-width multiplier of a two-sided 95% normal interval.
const Z_95: f64 = 1.959_963_984_540_054;

/// Confirmation counts of one or more simulation runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub true_events: u64,
    pub confirmed_true: u64,
    /// Events classified true although they were active for less than `T`.
    /// Always zero; kept so every run can be checked.
    pub false_positives: u64,
    pub estimate: f64,
    pub ci_halfwidth: f64,
    pub seed: Option<u64>,
}

impl SimStats {
    pub fn from_counts(true_events: u64, confirmed_true: u64, false_positives: u64, seed: Option<u64>) -> Self {
        let (estimate, ci_halfwidth) = if true_events == 0 {
            (0.0, 0.0)
        } else {
            let n = true_events as f64;
            let p = confirmed_true as f64 / n;
            (p, Z_95 * (p * (1.0 - p) / n).sqrt())
        };
        SimStats {
            true_events,
            confirmed_true,
            false_positives,
            estimate,
            ci_halfwidth,
            seed,
        }
    }

    /// Sums the counts of several runs. Order does not matter.
    pub fn pool<'a>(runs: impl IntoIterator<Item = &'a SimStats>, seed: Option<u64>) -> SimStats {
        let (mut t, mut c, mut f) = (0, 0, 0);
        for r in runs {
            t += r.true_events;
            c += r.confirmed_true;
            f += r.false_positives;
        }
        SimStats::from_counts(t, c, f, seed)
    }

    /// Binomial standard error of the estimate.
    pub fn std_error(&self) -> f64 {
        self.ci_halfwidth / Z_95
    }
}
