//! Offline event detection and confirmation: every event `(v, t_s, t_f)` is
//! known in advance and one robot must detect each true event inside
//! `[t_s, t_f - T]` and confirm it inside `[t_det + T, t_f]`.
//!
//! Deciding whether such a route exists is NP-complete; TSP with time
//! windows reduces to it via [`reduce_tsptw`]. Both decision problems are
//! solved here by exhaustive search for small instances.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{ensure_positive, EdcError, Result};
use crate::graph::PatrolGraph;
use crate::sim::Event;

/// Absolute slack applied to every window boundary.
pub const WINDOW_SLACK: f64 = 1e-9;

/// Largest number of true events [`offline_feasible`] accepts.
pub const OFFLINE_EVENT_CAP: usize = 12;

/// Largest vertex count [`tsptw_feasible`] accepts.
pub const TSPTW_VERTEX_CAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn contains(&self, t: f64) -> bool {
        self.start - WINDOW_SLACK <= t && t <= self.end + WINDOW_SLACK
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventWindows {
    pub detection: Window,
    pub confirmation: Option<Window>,
}

/// Detection window `[t_s, t_f - T]` and, given a detection time, the
/// confirmation window `[t_det + T, t_f]`. False events have no windows.
pub fn windows(e: &Event, t_crit: f64, t_det: Option<f64>) -> Result<Option<EventWindows>> {
    ensure_positive("critical time", t_crit)?;
    if !e.is_true(t_crit) {
        return match t_det {
            Some(_) => Err(EdcError::validation(format!(
                "event {} is shorter than T and cannot be detected for confirmation",
                e.id
            ))),
            None => Ok(None),
        };
    }
    let detection = Window {
        start: e.t_s,
        end: e.t_f - t_crit,
    };
    let confirmation = match t_det {
        None => None,
        Some(t) if detection.contains(t) => Some(Window {
            start: t + t_crit,
            end: e.t_f,
        }),
        Some(t) => {
            return Err(EdcError::validation(format!(
                "detection time {t} outside [{}, {}]",
                detection.start, detection.end
            )))
        }
    };
    Ok(Some(EventWindows {
        detection,
        confirmation,
    }))
}

/// A known-events instance. Event vertices are dense graph indices.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineInstance {
    pub graph: PatrolGraph,
    pub critical_time: f64,
    pub events: Vec<Event>,
    pub speed: f64,
    /// `None` lets the robot start anywhere.
    pub start_vertex: Option<usize>,
}

impl OfflineInstance {
    pub fn new(
        graph: PatrolGraph,
        critical_time: f64,
        events: Vec<Event>,
        speed: f64,
        start_vertex: Option<usize>,
    ) -> Result<Self> {
        ensure_positive("critical time", critical_time)?;
        ensure_positive("speed", speed)?;
        if let Some(s) = start_vertex {
            if s >= graph.len() {
                return Err(EdcError::validation(format!("start vertex index {s} out of range")));
            }
        }
        let mut ids = std::collections::HashSet::new();
        for e in &events {
            if e.vertex >= graph.len() {
                return Err(EdcError::validation(format!(
                    "event {} at unknown vertex index {}",
                    e.id, e.vertex
                )));
            }
            if !(e.t_s.is_finite() && e.t_f.is_finite() && e.t_f > e.t_s) {
                return Err(EdcError::validation(format!(
                    "event {} needs finite t_s < t_f",
                    e.id
                )));
            }
            if !ids.insert(e.id) {
                return Err(EdcError::validation(format!("duplicate event id {}", e.id)));
            }
        }
        let mut sorted: Vec<&Event> = events.iter().collect();
        sorted.sort_by(|a, b| a.vertex.cmp(&b.vertex).then(a.t_s.total_cmp(&b.t_s)));
        for w in sorted.windows(2) {
            if w[0].vertex == w[1].vertex && w[1].t_s <= w[0].t_f {
                return Err(EdcError::validation(format!(
                    "events {} and {} overlap at vertex index {}",
                    w[0].id, w[1].id, w[0].vertex
                )));
            }
        }
        Ok(OfflineInstance {
            graph,
            critical_time,
            events,
            speed,
            start_vertex,
        })
    }

    fn travel(&self, from: usize, to: usize) -> f64 {
        self.graph.dist(from, to) / self.speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "event", rename_all = "snake_case")]
pub enum Action {
    Transit,
    Detect(u64),
    Confirm(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledVisit {
    /// Dense vertex index.
    pub vertex: usize,
    pub time: f64,
    pub action: Action,
}

/// Timed visits of one robot; travel between listed visits is direct.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Schedule {
    pub visits: Vec<ScheduledVisit>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Feasible(Schedule),
    Infeasible,
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible(_))
    }
}

#[derive(Clone, Copy)]
struct Job {
    id: u64,
    vertex: usize,
    t_s: f64,
    t_f: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Status {
    Pending,
    Detected(f64),
    Confirmed,
}

/// Non-dominated (time, detection times) pairs per search state.
type Frontier = HashMap<(usize, u32, u32), Vec<(f64, Vec<f64>)>>;

struct Search<'a> {
    inst: &'a OfflineInstance,
    jobs: Vec<Job>,
    t_crit: f64,
    status: Vec<Status>,
    path: Vec<ScheduledVisit>,
    /// (location, pending mask, confirmed mask) -> non-dominated
    /// (time, detection times of detected events) seen so far.
    seen: Frontier,
}

impl Search<'_> {
    fn masks(&self) -> (u32, u32, Vec<f64>) {
        let (mut pending, mut confirmed) = (0u32, 0u32);
        let mut dets = Vec::new();
        for (i, s) in self.status.iter().enumerate() {
            match s {
                Status::Pending => pending |= 1 << i,
                Status::Confirmed => confirmed |= 1 << i,
                Status::Detected(t) => dets.push(*t),
            }
        }
        (pending, confirmed, dets)
    }

    /// Records the state; false if an earlier state at least as good exists.
    fn fresh(&mut self, loc: usize, time: f64) -> bool {
        let (pending, confirmed, dets) = self.masks();
        let entry = self.seen.entry((loc, pending, confirmed)).or_default();
        let dominated = entry
            .iter()
            .any(|(t, d)| *t <= time && d.iter().zip(&dets).all(|(a, b)| a <= b));
        if dominated {
            return false;
        }
        entry.retain(|(t, d)| !(time <= *t && dets.iter().zip(d).all(|(a, b)| a <= b)));
        entry.push((time, dets));
        true
    }

    /// Every outstanding deadline still reachable by direct travel.
    fn reachable(&self, loc: usize, time: f64) -> bool {
        self.jobs.iter().zip(&self.status).all(|(j, s)| {
            let arrive = time + self.inst.travel(loc, j.vertex);
            match s {
                Status::Pending => arrive.max(j.t_s) <= j.t_f - self.t_crit + WINDOW_SLACK,
                Status::Detected(d) => arrive.max(d + self.t_crit) <= j.t_f + WINDOW_SLACK,
                Status::Confirmed => true,
            }
        })
    }

    fn dfs(&mut self, loc: usize, time: f64) -> bool {
        if self.status.iter().all(|s| *s == Status::Confirmed) {
            return true;
        }
        if !self.reachable(loc, time) || !self.fresh(loc, time) {
            return false;
        }
        // (deadline, job, arrival)
        let mut moves: Vec<(f64, usize, f64)> = Vec::new();
        for (i, j) in self.jobs.iter().enumerate() {
            let arrive = time + self.inst.travel(loc, j.vertex);
            match self.status[i] {
                Status::Pending => {
                    moves.push((j.t_f - self.t_crit, i, arrive.max(j.t_s)));
                }
                Status::Detected(d) => {
                    moves.push((j.t_f, i, arrive.max(d + self.t_crit)));
                }
                Status::Confirmed => {}
            }
        }
        moves.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (deadline, i, at) in moves {
            if at > deadline + WINDOW_SLACK {
                continue;
            }
            let job = self.jobs[i];
            let before = self.status[i];
            let action = match before {
                Status::Pending => {
                    self.status[i] = Status::Detected(at);
                    Action::Detect(job.id)
                }
                _ => {
                    self.status[i] = Status::Confirmed;
                    Action::Confirm(job.id)
                }
            };
            self.path.push(ScheduledVisit {
                vertex: job.vertex,
                time: at,
                action,
            });
            if self.dfs(job.vertex, at) {
                return true;
            }
            self.path.pop();
            self.status[i] = before;
        }
        false
    }
}

/// Decides whether one robot can detect and confirm every true event.
///
/// Depth-first branch and bound over interleavings of detect and confirm
/// actions, each scheduled as early as possible (waiting is allowed). The
/// robot starts at `min t_s` over all events, either at the fixed start
/// vertex or at any vertex.
pub fn offline_feasible(inst: &OfflineInstance) -> Result<Verdict> {
    let t_crit = inst.critical_time;
    let jobs: Vec<Job> = inst
        .events
        .iter()
        .filter(|e| e.is_true(t_crit))
        .map(|e| Job {
            id: e.id,
            vertex: e.vertex,
            t_s: e.t_s,
            t_f: e.t_f,
        })
        .collect();
    if jobs.len() > OFFLINE_EVENT_CAP {
        return Err(EdcError::SizeCap {
            what: "offline true event count",
            limit: OFFLINE_EVENT_CAP,
            got: jobs.len(),
        });
    }
    let t0 = inst
        .events
        .iter()
        .map(|e| e.t_s)
        .fold(f64::INFINITY, f64::min);
    if jobs.is_empty() {
        return Ok(Verdict::Feasible(Schedule::default()));
    }
    let starts: Vec<usize> = match inst.start_vertex {
        Some(s) => vec![s],
        None => (0..inst.graph.len()).collect(),
    };
    let mut search = Search {
        inst,
        status: vec![Status::Pending; jobs.len()],
        jobs,
        t_crit,
        path: Vec::new(),
        seen: HashMap::new(),
    };
    for s in starts {
        search.path.clear();
        search.path.push(ScheduledVisit {
            vertex: s,
            time: t0,
            action: Action::Transit,
        });
        if search.dfs(s, t0) {
            return Ok(Verdict::Feasible(Schedule {
                visits: std::mem::take(&mut search.path),
            }));
        }
    }
    Ok(Verdict::Infeasible)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub earliest: f64,
    pub latest: f64,
}

/// TSP with time windows, decision form: visit every vertex once inside its
/// window, travel time equal to distance.
#[derive(Debug, Clone, PartialEq)]
pub struct TsptwInstance {
    pub graph: PatrolGraph,
    /// Indexed by dense vertex index.
    pub windows: Vec<TimeWindow>,
}

impl TsptwInstance {
    pub fn new(graph: PatrolGraph, windows: Vec<TimeWindow>) -> Result<Self> {
        if windows.len() != graph.len() {
            return Err(EdcError::validation(format!(
                "{} windows for {} vertices",
                windows.len(),
                graph.len()
            )));
        }
        for (i, w) in windows.iter().enumerate() {
            if !(w.earliest.is_finite() && w.latest.is_finite() && w.earliest <= w.latest) {
                return Err(EdcError::validation(format!(
                    "window of vertex {} must satisfy earliest <= latest",
                    graph.id(i)
                )));
            }
        }
        Ok(TsptwInstance { graph, windows })
    }

    fn start_time(&self) -> f64 {
        self.windows
            .iter()
            .map(|w| w.earliest)
            .fold(f64::INFINITY, f64::min)
    }
}

fn tsptw_extend(t: &TsptwInstance, order: &mut Vec<usize>, used: &mut [bool], loc: usize, time: f64) -> bool {
    if order.len() == used.len() {
        return true;
    }
    for next in 0..used.len() {
        if used[next] {
            continue;
        }
        let w = t.windows[next];
        let at = (time + t.graph.dist(loc, next)).max(w.earliest);
        if at > w.latest + WINDOW_SLACK {
            continue;
        }
        used[next] = true;
        order.push(next);
        if tsptw_extend(t, order, used, next, at) {
            return true;
        }
        order.pop();
        used[next] = false;
    }
    false
}

/// Exhaustive search for an open path visiting every vertex in its window,
/// starting anywhere at `min earliest`. Returns a witness vertex order.
pub fn tsptw_feasible(t: &TsptwInstance) -> Result<Option<Vec<usize>>> {
    let n = t.graph.len();
    if n > TSPTW_VERTEX_CAP {
        return Err(EdcError::SizeCap {
            what: "TSPTW vertex count",
            limit: TSPTW_VERTEX_CAP,
            got: n,
        });
    }
    let t0 = t.start_time();
    for s in 0..n {
        let w = t.windows[s];
        let at = t0.max(w.earliest);
        if at > w.latest + WINDOW_SLACK {
            continue;
        }
        let mut used = vec![false; n];
        used[s] = true;
        let mut order = vec![s];
        if tsptw_extend(t, &mut order, &mut used, s, at) {
            return Ok(Some(order));
        }
    }
    Ok(None)
}

/// Builds the offline instance whose feasibility is equivalent to the
/// TSPTW instance's: same graph, speed 1, free start,
/// `T = sum of all pairwise distances + max latest - min earliest`, and at
/// vertex `i` one event `(i, e_i, l_i + T)`, so that its detection window
/// is exactly `[e_i, l_i]`.
///
/// A degenerate single-vertex instance with a point window would give
/// `T = 0`; any larger `T` preserves the equivalence, so 1 is used there.
pub fn reduce_tsptw(t: &TsptwInstance) -> OfflineInstance {
    let latest = t.windows.iter().map(|w| w.latest).fold(f64::NEG_INFINITY, f64::max);
    let mut t_crit = t.graph.closure_weight_sum() + latest - t.start_time();
    if !(t_crit > 0.0) {
        t_crit = 1.0;
    }
    let events = t
        .windows
        .iter()
        .enumerate()
        .map(|(i, w)| Event {
            id: i as u64,
            vertex: i,
            t_s: w.earliest,
            t_f: w.latest + t_crit,
        })
        .collect();
    OfflineInstance {
        graph: t.graph.clone(),
        critical_time: t_crit,
        events,
        speed: 1.0,
        start_vertex: None,
    }
}
