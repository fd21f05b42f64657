use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::rng::substream;
use crate::error::{ensure_positive, EdcError, Result};

/// Periodic visit times `k * tau + offset` for every offset, `k` integer.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitGrid {
    tau: f64,
    offsets: Vec<f64>,
}

impl VisitGrid {
    pub fn new(tau: f64, offsets: &[f64]) -> Result<Self> {
        ensure_positive("tau", tau)?;
        if offsets.is_empty() {
            return Err(EdcError::validation("need at least one robot offset"));
        }
        if let Some(bad) = offsets.iter().find(|&&o| !(0.0..tau).contains(&o)) {
            return Err(EdcError::validation(format!(
                "robot offset {bad} outside [0, {tau})"
            )));
        }
        Ok(VisitGrid {
            tau,
            offsets: offsets.to_vec(),
        })
    }

    /// Earliest visit at or after `t`. Visits within `1e-12 * (|t| + tau)`
    /// below `t` count as at `t`, so grid points hit by exact arithmetic
    /// survive rounding.
    pub fn next_visit(&self, t: f64) -> f64 {
        let slack = 1e-12 * (t.abs() + self.tau);
        self.offsets
            .iter()
            .map(|&o| {
                let k = ((t - slack - o) / self.tau).ceil();
                k * self.tau + o
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Detection and earliest possible confirmation time of an event
    /// arriving at `arrival`.
    pub fn detect_confirm(&self, arrival: f64, t_crit: f64) -> (f64, f64) {
        let det = self.next_visit(arrival);
        (det, self.next_visit(det + t_crit))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionedEstimate {
    pub samples: u64,
    pub confirmed: u64,
    pub estimate: f64,
    /// Binomial standard error of `estimate`.
    pub std_error: f64,
}

/// Fraction of true events confirmed by robots visiting every `tau` at the
/// given offsets, under the idealized single-event model: arrival uniform on
/// `(0, tau]`, duration `T + Exp(mu)` (an exponential conditioned to exceed
/// `T`).
pub fn simulate_conditioned_cycle(
    tau: f64,
    mu: f64,
    t_crit: f64,
    lags: &[f64],
    samples: u64,
    seed: u64,
) -> Result<ConditionedEstimate> {
    ensure_positive("mu", mu)?;
    ensure_positive("critical time", t_crit)?;
    if samples == 0 {
        return Err(EdcError::validation("samples must be at least 1"));
    }
    let grid = VisitGrid::new(tau, lags)?;
    let overstay = Exp::new(mu).expect("validated rate");
    let mut rng = substream(seed, 0);
    let mut confirmed = 0u64;
    for _ in 0..samples {
        // 1 - U maps [0, 1) onto (0, 1].
        let arrival = tau * (1.0 - rng.random::<f64>());
        let departure = arrival + t_crit + overstay.sample(&mut rng);
        let (_, conf) = grid.detect_confirm(arrival, t_crit);
        if conf <= departure {
            confirmed += 1;
        }
    }
    let n = samples as f64;
    let p = confirmed as f64 / n;
    Ok(ConditionedEstimate {
        samples,
        confirmed,
        estimate: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn next_visit_on_grid() {
        let g = VisitGrid::new(14.5, &[0.0, 4.0]).unwrap();
        assert_eq!(g.next_visit(0.1), 4.0);
        assert_eq!(g.next_visit(4.0), 4.0);
        assert_eq!(g.next_visit(4.2), 14.5);
        assert_eq!(g.next_visit(14.5 + 120.0), 134.5);
        // 9 * 14.5 + 4 computed two ways.
        assert_eq!(g.next_visit(14.5 * 9.0 + 4.0), 134.5);
    }

    #[test]
    fn slack_stays_far_below_tiny_thresholds() {
        let g = VisitGrid::new(1.0, &[0.0]).unwrap();
        let (det, conf) = g.detect_confirm(0.5, 1e-9);
        assert_eq!((det, conf), (1.0, 2.0));
    }

    #[test]
    fn rejects_bad_offsets() {
        assert!(VisitGrid::new(1.0, &[1.0]).is_err());
        assert!(VisitGrid::new(1.0, &[]).is_err());
        assert!(simulate_conditioned_cycle(1.0, 1.0, 1.0, &[0.0], 0, 1).is_err());
    }

    #[test]
    fn deterministic() {
        let a = simulate_conditioned_cycle(1.3, 0.7, 2.0, &[0.0, 0.4], 1000, 8).unwrap();
        let b = simulate_conditioned_cycle(1.3, 0.7, 2.0, &[0.0, 0.4], 1000, 8).unwrap();
        assert_eq!(a, b);
    }
}
