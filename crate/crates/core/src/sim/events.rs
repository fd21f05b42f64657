use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::rng::substream;
use crate::analytic::VertexParams;
use crate::error::{ensure_positive, Result};

/// One event: active at `vertex` on the closed interval `[t_s, t_f]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub id: u64,
    pub vertex: usize,
    pub t_s: f64,
    pub t_f: f64,
}

impl Event {
    /// True events stay active for at least the critical time.
    pub fn is_true(&self, t_crit: f64) -> bool {
        self.t_f - self.t_s >= t_crit
    }

    pub fn is_active_at(&self, t: f64) -> bool {
        self.t_s <= t && t <= self.t_f
    }
}

/// Events plus the horizon they were generated for. Events that end after
/// the horizon are simulated but left out of the statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSet {
    pub horizon: f64,
    pub events: Vec<Event>,
}

impl EventSet {
    /// Hand-built events with no horizon cut.
    pub fn unbounded(events: Vec<Event>) -> Self {
        EventSet {
            horizon: f64::INFINITY,
            events,
        }
    }

    pub fn counts(&self, e: &Event) -> bool {
        e.t_f <= self.horizon
    }
}

/// Samples an alternating renewal process at every vertex with a positive
/// arrival rate: idle for `Exp(lambda)`, then active for `Exp(mu)`.
///
/// `params[v]` belongs to vertex index `v`, which is also its random
/// stream. Ids are assigned vertex by vertex in arrival order.
pub fn generate_events(params: &[VertexParams], horizon: f64, seed: u64) -> Result<EventSet> {
    ensure_positive("horizon", horizon)?;
    let mut events = Vec::new();
    let mut next_id = 0;
    for (vertex, p) in params.iter().enumerate() {
        if p.lambda == 0.0 {
            continue;
        }
        let mut rng = substream(seed, vertex as u64);
        let idle = Exp::new(p.lambda).expect("validated rate");
        let active = Exp::new(p.mu).expect("validated rate");
        let mut t = 0.0;
        loop {
            t += idle.sample(&mut rng);
            if t > horizon {
                break;
            }
            let t_f = t + active.sample(&mut rng);
            events.push(Event {
                id: next_id,
                vertex,
                t_s: t,
                t_f,
            });
            next_id += 1;
            t = t_f;
        }
    }
    Ok(EventSet { horizon, events })
}
