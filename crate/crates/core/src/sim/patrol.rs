use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::events::{generate_events, EventSet};
use super::SimStats;
use crate::analytic::VertexParams;
use crate::error::{ensure_positive, EdcError, Result};
use crate::graph::Tour;

/// Robots driving one tour at a common speed. Robot `r` passes every point
/// of the tour `lags[r]` time units after robot 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotFleet {
    tour: Tour,
    speed: f64,
    lags: Vec<f64>,
}

impl RobotFleet {
    /// `lags` must start at 0 and increase strictly below the period.
    pub fn new(tour: Tour, speed: f64, lags: Vec<f64>) -> Result<Self> {
        ensure_positive("speed", speed)?;
        if !(tour.length() > 0.0) {
            return Err(EdcError::validation("tour has zero length; a fleet needs a positive period"));
        }
        let period = tour.length() / speed;
        if lags.first() != Some(&0.0) {
            return Err(EdcError::validation("first robot lag must be 0"));
        }
        if lags.windows(2).any(|w| !(w[0] < w[1])) || lags.iter().any(|&l| !(l < period)) {
            return Err(EdcError::validation(format!(
                "lags must increase strictly within [0, {period})"
            )));
        }
        Ok(RobotFleet { tour, speed, lags })
    }

    pub fn single(tour: Tour, speed: f64) -> Result<Self> {
        RobotFleet::new(tour, speed, vec![0.0])
    }

    pub fn tour(&self) -> &Tour {
        &self.tour
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn lags(&self) -> &[f64] {
        &self.lags
    }

    pub fn period(&self) -> f64 {
        self.tour.length() / self.speed
    }

    /// Time of robot `robot`'s visit to tour position `pos` on lap `lap`.
    fn visit_time(&self, robot: usize, pos: usize, lap: i64) -> f64 {
        self.lags[robot] + (lap as f64 * self.tour.length() + self.tour.phases()[pos]) / self.speed
    }
}

/// What happened to one event in a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventOutcome {
    pub event_id: u64,
    /// Whether the event ends inside the horizon and enters the statistics.
    pub counted: bool,
    pub is_true: bool,
    pub detected_at: Option<f64>,
    pub confirmed_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatrolRun {
    pub stats: SimStats,
    /// Aligned with the input event list.
    pub outcomes: Vec<EventOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    /// Detects and confirms.
    Dual,
    /// Records new events only.
    Detect,
    /// Confirms recorded events only.
    Confirm,
}

#[derive(Debug, Clone, Copy)]
struct Visit {
    time: f64,
    robot: usize,
    pos: usize,
    lap: i64,
    role: Role,
}

impl PartialEq for Visit {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Visit {}
impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Visit {
    // Reversed so BinaryHeap pops the earliest visit; confirmations at the
    // same instant run before detections.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| (self.role as u8).cmp(&(other.role as u8)))
            .then_with(|| other.robot.cmp(&self.robot))
            .then_with(|| other.pos.cmp(&self.pos))
    }
}

/// Per-vertex event lists plus the shared detection database.
struct World<'a> {
    set: &'a EventSet,
    t_crit: f64,
    by_vertex: Vec<Vec<usize>>,
    cursor: Vec<usize>,
    /// Database: the event last seen at each vertex and when it was first seen.
    record: Vec<Option<(usize, f64)>>,
    outcomes: Vec<EventOutcome>,
    has_finite: bool,
    open_immortal: usize,
    stop_time: f64,
}

impl<'a> World<'a> {
    fn new(set: &'a EventSet, tour: &Tour, n_vertices: usize, t_crit: f64) -> Result<Self> {
        let mut by_vertex = vec![Vec::new(); n_vertices];
        for (i, e) in set.events.iter().enumerate() {
            if !(e.t_f > e.t_s) || e.t_s.is_nan() {
                return Err(EdcError::validation(format!("event {} has t_f <= t_s", e.id)));
            }
            if e.vertex >= n_vertices || !tour.contains(e.vertex) {
                return Err(EdcError::validation(format!(
                    "event {} is at vertex index {} which the tour does not visit",
                    e.id, e.vertex
                )));
            }
            by_vertex[e.vertex].push(i);
        }
        for list in &mut by_vertex {
            list.sort_by(|&a, &b| set.events[a].t_s.total_cmp(&set.events[b].t_s));
            for w in list.windows(2) {
                let (a, b) = (&set.events[w[0]], &set.events[w[1]]);
                if b.t_s <= a.t_f {
                    return Err(EdcError::validation(format!(
                        "events {} and {} overlap at vertex index {}",
                        a.id, b.id, a.vertex
                    )));
                }
            }
        }
        let mut has_finite = false;
        let mut open_immortal = 0;
        let mut stop_time = f64::NEG_INFINITY;
        let outcomes = set
            .events
            .iter()
            .map(|e| {
                let counted = set.counts(e);
                if counted {
                    if e.t_f.is_finite() {
                        has_finite = true;
                        stop_time = stop_time.max(e.t_f);
                    } else {
                        open_immortal += 1;
                    }
                }
                EventOutcome {
                    event_id: e.id,
                    counted,
                    is_true: e.is_true(t_crit),
                    detected_at: None,
                    confirmed_at: None,
                }
            })
            .collect();
        Ok(World {
            set,
            t_crit,
            by_vertex,
            cursor: vec![0; n_vertices],
            record: vec![None; n_vertices],
            outcomes,
            has_finite,
            open_immortal,
            stop_time,
        })
    }

    fn done(&self, now: f64) -> bool {
        self.open_immortal == 0 && (!self.has_finite || now > self.stop_time)
    }

    /// Index of the event active at `vertex` at time `t`, if any.
    fn active(&mut self, vertex: usize, t: f64) -> Option<usize> {
        let list = &self.by_vertex[vertex];
        let cur = &mut self.cursor[vertex];
        while *cur < list.len() && self.set.events[list[*cur]].t_f < t {
            *cur += 1;
        }
        let idx = *list.get(*cur)?;
        self.set.events[idx].is_active_at(t).then_some(idx)
    }

    fn observe(&mut self, vertex: usize, t: f64, role: Role) {
        let Some(idx) = self.active(vertex, t) else {
            // Empty vertex: forget whatever was recorded there.
            if role != Role::Confirm {
                self.record[vertex] = None;
            }
            return;
        };
        match self.record[vertex] {
            Some((seen, first)) if seen == idx => {
                if role != Role::Detect
                    && self.outcomes[idx].confirmed_at.is_none()
                    && first + self.t_crit <= t
                {
                    self.confirm(idx, t);
                }
            }
            _ => {
                if role != Role::Confirm {
                    self.record[vertex] = Some((idx, t));
                    self.outcomes[idx].detected_at = Some(t);
                }
            }
        }
    }

    fn confirm(&mut self, idx: usize, t: f64) {
        let out = &mut self.outcomes[idx];
        out.confirmed_at = Some(t);
        if out.counted && self.set.events[idx].t_f.is_infinite() {
            self.open_immortal -= 1;
        }
    }

    fn finish(self) -> PatrolRun {
        let mut true_events = 0;
        let mut confirmed = 0;
        let mut false_pos = 0;
        for o in &self.outcomes {
            if o.confirmed_at.is_some() && !o.is_true {
                false_pos += 1;
            }
            if !o.counted {
                continue;
            }
            if o.is_true {
                true_events += 1;
                if o.confirmed_at.is_some() {
                    confirmed += 1;
                }
            }
        }
        PatrolRun {
            stats: SimStats::from_counts(true_events, confirmed, false_pos, None),
            outcomes: self.outcomes,
        }
    }
}

fn run(fleet: &RobotFleet, set: &EventSet, t_crit: f64, specialized: bool) -> Result<PatrolRun> {
    ensure_positive("critical time", t_crit)?;
    let tour = fleet.tour();
    let n_vertices = tour.order().iter().copied().max().unwrap_or(0) + 1;
    let n_vertices = n_vertices.max(set.events.iter().map(|e| e.vertex + 1).max().unwrap_or(0));
    let mut world = World::new(set, tour, n_vertices, t_crit)?;
    if world.done(f64::NEG_INFINITY) {
        return Ok(world.finish());
    }

    let period = fleet.period();
    let mut heap = BinaryHeap::new();
    let role = if specialized { Role::Detect } else { Role::Dual };
    for robot in 0..fleet.lags().len() {
        for pos in 0..tour.order().len() {
            // Robots have been circulating forever: start from the earliest
            // non-negative visit, which may belong to the previous lap.
            let lap = if fleet.visit_time(robot, pos, -1) >= 0.0 { -1 } else { 0 };
            debug_assert!(fleet.visit_time(robot, pos, lap) < period + fleet.lags()[robot]);
            heap.push(Visit {
                time: fleet.visit_time(robot, pos, lap),
                robot,
                pos,
                lap,
                role,
            });
        }
    }

    while let Some(v) = heap.pop() {
        if world.done(v.time) {
            break;
        }
        let vertex = tour.order()[v.pos];
        world.observe(vertex, v.time, v.role);
        if v.role == Role::Confirm {
            continue;
        }
        if specialized {
            // The confirmation robot shadowing this detection robot passes
            // here exactly T later.
            heap.push(Visit {
                time: v.time + t_crit,
                role: Role::Confirm,
                ..v
            });
        }
        let lap = v.lap + 1;
        heap.push(Visit {
            time: fleet.visit_time(v.robot, v.pos, lap),
            lap,
            ..v
        });
    }
    Ok(world.finish())
}

/// Runs the fleet over `events`, every robot both detecting and confirming
/// through a shared database.
///
/// At each visit: an empty vertex clears its record; an unseen event is
/// recorded with the visit time; a recorded event is confirmed once the
/// visit is at least `T` after it was first seen.
pub fn simulate_patrol(fleet: &RobotFleet, events: &EventSet, t_crit: f64) -> Result<PatrolRun> {
    run(fleet, events, t_crit, false)
}

/// Runs `detection_fleet` as detection-only robots, each shadowed by a
/// confirmation-only robot replaying its path exactly `T` later.
pub fn simulate_specialized(
    detection_fleet: &RobotFleet,
    events: &EventSet,
    t_crit: f64,
) -> Result<PatrolRun> {
    run(detection_fleet, events, t_crit, true)
}

/// Everything needed to run independent free-running replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatrolConfig {
    pub fleet: RobotFleet,
    /// Indexed by vertex index.
    pub params: Vec<VertexParams>,
    pub critical_time: f64,
    pub horizon: f64,
}

/// Pools `replications` independent runs seeded `base_seed + i`.
///
/// Replications run in parallel; the result depends only on the inputs.
pub fn estimate_confirm_prob(config: &PatrolConfig, replications: u64, base_seed: u64) -> Result<SimStats> {
    if replications == 0 {
        return Err(EdcError::validation("replications must be at least 1"));
    }
    let runs: Vec<SimStats> = (0..replications)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i);
            let events = generate_events(&config.params, config.horizon, seed)?;
            simulate_patrol(&config.fleet, &events, config.critical_time).map(|r| r.stats)
        })
        .collect::<Result<_>>()?;
    Ok(SimStats::pool(&runs, Some(base_seed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{metric_closure, tsp_tour, TspMode};
    use crate::sim::Event;

    // Two vertices 0.5 apart: tour length 1, each visited once per period.
    fn pair_fleet(speed: f64, lags: Vec<f64>) -> RobotFleet {
        let g = metric_closure(&[0, 1], &[(0, 1, 0.5)]).unwrap();
        let tour = tsp_tour(&g, TspMode::Exact).unwrap();
        RobotFleet::new(tour, speed, lags).unwrap()
    }

    fn ev(id: u64, vertex: usize, t_s: f64, t_f: f64) -> Event {
        Event { id, vertex, t_s, t_f }
    }

    #[test]
    fn immortal_event_confirmed_after_t() {
        let fleet = pair_fleet(1.0, vec![0.0]);
        let set = EventSet::unbounded(vec![ev(0, 0, 0.3, f64::INFINITY)]);
        let run = simulate_patrol(&fleet, &set, 2.5).unwrap();
        let o = run.outcomes[0];
        assert_eq!(o.detected_at, Some(1.0));
        assert_eq!(o.confirmed_at, Some(4.0));
        assert_eq!((run.stats.true_events, run.stats.confirmed_true), (1, 1));
    }

    #[test]
    fn event_between_visits_is_invisible() {
        let fleet = pair_fleet(1.0, vec![0.0]);
        // Vertex 0 is visited at integer times.
        let set = EventSet::unbounded(vec![ev(0, 0, 2.1, 2.9)]);
        let run = simulate_patrol(&fleet, &set, 0.5).unwrap();
        assert_eq!(run.outcomes[0].detected_at, None);
        assert_eq!((run.stats.true_events, run.stats.confirmed_true), (1, 0));
    }

    #[test]
    fn lagged_robot_detects_first() {
        let fleet = pair_fleet(1.0, vec![0.0, 0.25]);
        let set = EventSet::unbounded(vec![ev(0, 0, 0.1, 5.0)]);
        let run = simulate_patrol(&fleet, &set, 1.0).unwrap();
        assert_eq!(run.outcomes[0].detected_at, Some(0.25));
        assert_eq!(run.outcomes[0].confirmed_at, Some(1.25));
    }

    #[test]
    fn confirmation_exactly_at_departure_counts() {
        let fleet = pair_fleet(1.0, vec![0.0]);
        let set = EventSet::unbounded(vec![ev(0, 0, 0.5, 3.0)]);
        let run = simulate_patrol(&fleet, &set, 2.0).unwrap();
        assert_eq!(run.outcomes[0].confirmed_at, Some(3.0));
    }

    #[test]
    fn false_event_never_confirmed() {
        let fleet = pair_fleet(1.0, vec![0.0]);
        let set = EventSet::unbounded(vec![ev(0, 0, 0.5, 2.2)]);
        let run = simulate_patrol(&fleet, &set, 2.0).unwrap();
        assert_eq!(run.outcomes[0].confirmed_at, None);
        assert_eq!(run.stats.true_events, 0);
    }

    #[test]
    fn horizon_straddlers_excluded() {
        let fleet = pair_fleet(1.0, vec![0.0]);
        let set = EventSet {
            horizon: 10.0,
            events: vec![ev(0, 0, 0.5, 5.0), ev(1, 1, 8.0, 14.0)],
        };
        let run = simulate_patrol(&fleet, &set, 2.0).unwrap();
        assert_eq!(run.stats.true_events, 1);
        assert!(!run.outcomes[1].counted);
    }

    #[test]
    fn specialized_confirms_exactly_t_later() {
        let fleet = pair_fleet(1.0, vec![0.0]);
        let set = EventSet::unbounded(vec![ev(0, 0, 0.5, 3.4), ev(1, 1, 0.2, 3.6)]);
        let run = simulate_specialized(&fleet, &set, 2.3).unwrap();
        // Vertex 0 is visited at integer times, vertex 1 at half-integers.
        assert_eq!(run.outcomes[0].detected_at, Some(1.0));
        assert_eq!(run.outcomes[0].confirmed_at, Some(1.0 + 2.3));
        assert_eq!(run.outcomes[1].confirmed_at, Some(0.5 + 2.3));
        // Alone, the robot only returns to vertex 0 at 4.0, too late.
        let run_dual = simulate_patrol(&fleet, &set, 2.3).unwrap();
        assert_eq!(run_dual.outcomes[0].confirmed_at, None);
        assert_eq!(run_dual.outcomes[1].confirmed_at, Some(3.5));
    }

    #[test]
    fn empty_events() {
        let fleet = pair_fleet(1.0, vec![0.0]);
        let set = EventSet::unbounded(vec![]);
        let s = simulate_specialized(&fleet, &set, 1.0).unwrap().stats;
        assert_eq!((s.true_events, s.confirmed_true, s.false_positives), (0, 0, 0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = metric_closure(&[0, 1, 2], &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let tour = crate::graph::Tour::from_order(&g, vec![0, 1]).unwrap();
        let fleet = RobotFleet::single(tour.clone(), 1.0).unwrap();
        let off_tour = EventSet::unbounded(vec![ev(0, 2, 0.0, 1.0)]);
        assert!(simulate_patrol(&fleet, &off_tour, 0.5).is_err());
        let overlap = EventSet::unbounded(vec![ev(0, 0, 0.0, 2.0), ev(1, 0, 1.0, 3.0)]);
        assert!(simulate_patrol(&fleet, &overlap, 0.5).is_err());
        assert!(RobotFleet::new(tour.clone(), 1.0, vec![0.5]).is_err());
        assert!(RobotFleet::new(tour.clone(), 1.0, vec![0.0, 0.0]).is_err());
        assert!(RobotFleet::new(tour.clone(), 1.0, vec![0.0, 2.0]).is_err());
        let lone = metric_closure(&[0], &[]).unwrap();
        let t0 = tsp_tour(&lone, TspMode::Exact).unwrap();
        assert!(RobotFleet::single(t0, 1.0).is_err());
    }

    #[test]
    fn replication_zero_rejected() {
        let cfg = PatrolConfig {
            fleet: pair_fleet(1.0, vec![0.0]),
            params: vec![VertexParams::new(0.1, 1.0).unwrap(); 2],
            critical_time: 1.0,
            horizon: 100.0,
        };
        assert!(estimate_confirm_prob(&cfg, 0, 1).is_err());
    }
}
