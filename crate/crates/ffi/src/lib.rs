//! C ABI over `edc-core`.
//!
//! Graphs and tours are opaque heap handles released with their `_free`
//! function. Every fallible call returns an [`EdcStatus`]; on failure the
//! message is available from [`edc_last_error`] on the same thread until the
//! next failing call. Vertices are addressed by the ids given at graph
//! construction. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use edc_core::analytic::{self, PolicyResult, VertexParams};
use edc_core::graph::{self, PatrolGraph, Tour, TspMode};
use edc_core::offline::{self, OfflineInstance, TimeWindow, TsptwInstance};
use edc_core::sim::{self, Event, PatrolConfig, RobotFleet};
use edc_core::EdcError;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdcStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Disconnected = 3,
    SizeCap = 4,
    Panic = 5,
}

/// TSP solver choice for [`edc_tour_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdcTspMode {
    Exact = 0,
    Heuristic = 1,
}

/// Opaque metric-closed patrol graph.
pub struct EdcGraph(PatrolGraph);

/// Opaque closed tour over an [`EdcGraph`].
pub struct EdcTour(Tour);

/// Policy chosen by the optimizers. `lag` is NaN for a single robot.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdcPolicy {
    pub tau: f64,
    pub speed: f64,
    pub lag: f64,
    pub probability: f64,
}

/// Pooled counts of a simulation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdcSimStats {
    pub true_events: u64,
    pub confirmed_true: u64,
    pub false_positives: u64,
    pub estimate: f64,
    pub ci_halfwidth: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Message of the last failing call on this thread, or null if none failed.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn edc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

enum Failure {
    Null(&'static str),
    Core(EdcError),
}

impl From<EdcError> for Failure {
    fn from(e: EdcError) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EdcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EdcStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            EdcStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            match e {
                EdcError::Validation(_) => EdcStatus::Validation,
                EdcError::Disconnected { .. } => EdcStatus::Disconnected,
                EdcError::SizeCap { .. } => EdcStatus::SizeCap,
            }
        }
        Err(_) => {
            set_error("internal panic".into());
            EdcStatus::Panic
        }
    }
}

/// Borrows `len` elements; a null pointer is accepted only when `len == 0`.
unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(std::slice::from_raw_parts(p, len))
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write<T>(p: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    p.write(value);
    Ok(())
}

fn index(g: &PatrolGraph, id: usize) -> Result<usize, Failure> {
    g.index_of(id)
        .ok_or_else(|| EdcError::validation(format!("vertex {id} is not in the graph")).into())
}

/// Builds the metric closure of an undirected weighted graph. Edge `i` joins
/// `edge_u[i]` and `edge_v[i]` with weight `edge_w[i]`.
///
/// # Safety
/// Array arguments must point to at least the stated number of elements;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edc_graph_new(
    ids: *const usize,
    n_ids: usize,
    edge_u: *const usize,
    edge_v: *const usize,
    edge_w: *const f64,
    n_edges: usize,
    out: *mut *mut EdcGraph,
) -> EdcStatus {
    guard(|| {
        let ids = slice(ids, n_ids, "ids")?;
        let u = slice(edge_u, n_edges, "edge_u")?;
        let v = slice(edge_v, n_edges, "edge_v")?;
        let w = slice(edge_w, n_edges, "edge_w")?;
        let edges: Vec<_> = (0..n_edges).map(|i| (u[i], v[i], w[i])).collect();
        let g = graph::metric_closure(ids, &edges)?;
        write(out, Box::into_raw(Box::new(EdcGraph(g))), "out")
    })
}

/// # Safety
/// `g` must be null or a handle from [`edc_graph_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn edc_graph_free(g: *mut EdcGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn edc_graph_len(g: *const EdcGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.len())
}

/// Shortest-path distance between two vertex ids.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edc_graph_dist(g: *const EdcGraph, from: usize, to: usize, out: *mut f64) -> EdcStatus {
    guard(|| {
        let g = &deref(g, "graph")?.0;
        let d = g.dist(index(g, from)?, index(g, to)?);
        write(out, d, "out")
    })
}

/// Computes a closed tour over every vertex of `g`.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edc_tour_new(g: *const EdcGraph, mode: EdcTspMode, out: *mut *mut EdcTour) -> EdcStatus {
    guard(|| {
        let g = &deref(g, "graph")?.0;
        let mode = match mode {
            EdcTspMode::Exact => TspMode::Exact,
            EdcTspMode::Heuristic => TspMode::Heuristic,
        };
        let t = graph::tsp_tour(g, mode)?;
        write(out, Box::into_raw(Box::new(EdcTour(t))), "out")
    })
}

/// # Safety
/// `t` must be null or a handle from [`edc_tour_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn edc_tour_free(t: *mut EdcTour) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Closed tour length, or NaN for a null handle.
///
/// # Safety
/// `t` must be null or a live tour handle.
#[no_mangle]
pub unsafe extern "C" fn edc_tour_length(t: *const EdcTour) -> f64 {
    t.as_ref().map_or(f64::NAN, |t| t.0.length())
}

/// Copies the visiting order as vertex ids into `buf` and returns the tour
/// size. Nothing is copied when `cap` is smaller than the tour.
///
/// # Safety
/// `g` and `t` must be live handles, `t` built from `g`; `buf` must hold
/// `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn edc_tour_order(g: *const EdcGraph, t: *const EdcTour, buf: *mut usize, cap: usize) -> usize {
    let (Some(g), Some(t)) = (g.as_ref(), t.as_ref()) else {
        return 0;
    };
    let order = t.0.order();
    if cap >= order.len() && !buf.is_null() {
        for (i, &v) in order.iter().enumerate() {
            buf.add(i).write(g.0.id(v));
        }
    }
    order.len()
}

/// Confirmation probability of one robot with period `tau`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edc_confirm_prob_single(tau: f64, mu: f64, t_crit: f64, out: *mut f64) -> EdcStatus {
    guard(|| write(out, analytic::confirm_prob_single(tau, mu, t_crit)?, "out"))
}

/// Confirmation probability of two robots on one tour, `lag` apart.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edc_confirm_prob_two_robots(
    tau: f64,
    mu: f64,
    t_crit: f64,
    lag: f64,
    out: *mut f64,
) -> EdcStatus {
    guard(|| write(out, analytic::confirm_prob_two_robots(tau, mu, t_crit, lag)?, "out"))
}

/// Best two-robot lag and its probability.
///
/// # Safety
/// `out_lag` and `out_prob` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edc_best_two_robot_lag(
    tau: f64,
    mu: f64,
    t_crit: f64,
    out_lag: *mut f64,
    out_prob: *mut f64,
) -> EdcStatus {
    guard(|| {
        let (lag, p) = analytic::best_two_robot_lag(tau, mu, t_crit)?;
        write(out_lag, lag, "out_lag")?;
        write(out_prob, p, "out_prob")
    })
}

fn policy(p: PolicyResult) -> EdcPolicy {
    EdcPolicy {
        tau: p.tau,
        speed: p.speed,
        lag: p.lag.unwrap_or(f64::NAN),
        probability: p.probability,
    }
}

/// Single-robot period and speed for a tour of length `tsp_length`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edc_optimize_single_robot(
    tsp_length: f64,
    v_max: f64,
    mu: f64,
    t_crit: f64,
    out: *mut EdcPolicy,
) -> EdcStatus {
    guard(|| write(out, policy(analytic::optimize_single_robot(tsp_length, v_max, mu, t_crit)?), "out"))
}

/// Two-robot period, speed and lag for a tour of length `tsp_length`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edc_optimize_two_robots(
    tsp_length: f64,
    v_max: f64,
    mu: f64,
    t_crit: f64,
    out: *mut EdcPolicy,
) -> EdcStatus {
    guard(|| write(out, policy(analytic::optimize_two_robots(tsp_length, v_max, mu, t_crit)?), "out"))
}

/// Monte Carlo estimate of the confirmation probability for robots passing a
/// vertex every `tau` at the given offsets. Writes the estimate and its
/// standard error.
///
/// # Safety
/// `lags` must hold `n_lags` elements; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn edc_simulate_conditioned(
    tau: f64,
    mu: f64,
    t_crit: f64,
    lags: *const f64,
    n_lags: usize,
    samples: u64,
    seed: u64,
    out_estimate: *mut f64,
    out_std_error: *mut f64,
) -> EdcStatus {
    guard(|| {
        let lags = slice(lags, n_lags, "lags")?;
        let r = sim::simulate_conditioned_cycle(tau, mu, t_crit, lags, samples, seed)?;
        write(out_estimate, r.estimate, "out_estimate")?;
        write(out_std_error, r.std_error, "out_std_error")
    })
}

/// Free-running simulation of robots on `tour` at `speed`, offset by `lags`
/// (first entry 0). `lambda` and `mu` hold one rate per vertex in the
/// order of the ids given to [`edc_graph_new`] sorted ascending.
///
/// # Safety
/// Handles must be live and `tour` built from `g`; arrays must hold the
/// stated number of elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edc_simulate_patrol(
    g: *const EdcGraph,
    tour: *const EdcTour,
    speed: f64,
    lags: *const f64,
    n_lags: usize,
    lambda: *const f64,
    mu: *const f64,
    n_vertices: usize,
    t_crit: f64,
    horizon: f64,
    replications: u64,
    seed: u64,
    out: *mut EdcSimStats,
) -> EdcStatus {
    guard(|| {
        let g = &deref(g, "graph")?.0;
        let tour = deref(tour, "tour")?.0.clone();
        let lags = slice(lags, n_lags, "lags")?.to_vec();
        let lambda = slice(lambda, n_vertices, "lambda")?;
        let mu = slice(mu, n_vertices, "mu")?;
        if n_vertices != g.len() {
            return Err(EdcError::validation(format!("{n_vertices} rates for {} vertices", g.len())).into());
        }
        let params = lambda
            .iter()
            .zip(mu)
            .map(|(&l, &m)| VertexParams::new(l, m))
            .collect::<edc_core::Result<Vec<_>>>()?;
        let config = PatrolConfig {
            fleet: RobotFleet::new(tour, speed, lags)?,
            params,
            critical_time: t_crit,
            horizon,
        };
        let s = sim::estimate_confirm_prob(&config, replications, seed)?;
        write(
            out,
            EdcSimStats {
                true_events: s.true_events,
                confirmed_true: s.confirmed_true,
                false_positives: s.false_positives,
                estimate: s.estimate,
                ci_halfwidth: s.ci_halfwidth,
            },
            "out",
        )
    })
}

/// Whether one robot can detect and confirm every true event of a known
/// event list. Event `i` occurs at vertex id `vertex[i]` over
/// `[t_s[i], t_f[i]]`. `start_vertex` is a vertex id, or negative for a free
/// start.
///
/// # Safety
/// `g` must be a live handle; arrays must hold `n_events` elements;
/// `out_feasible` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edc_offline_feasible(
    g: *const EdcGraph,
    t_crit: f64,
    speed: f64,
    start_vertex: i64,
    vertex: *const usize,
    t_s: *const f64,
    t_f: *const f64,
    n_events: usize,
    out_feasible: *mut bool,
) -> EdcStatus {
    guard(|| {
        let g = &deref(g, "graph")?.0;
        let vertex = slice(vertex, n_events, "vertex")?;
        let t_s = slice(t_s, n_events, "t_s")?;
        let t_f = slice(t_f, n_events, "t_f")?;
        let events = (0..n_events)
            .map(|i| {
                Ok(Event {
                    id: i as u64,
                    vertex: index(g, vertex[i])?,
                    t_s: t_s[i],
                    t_f: t_f[i],
                })
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        let start = match usize::try_from(start_vertex) {
            Ok(id) => Some(index(g, id)?),
            Err(_) => None,
        };
        let inst = OfflineInstance::new(g.clone(), t_crit, events, speed, start)?;
        write(out_feasible, offline::offline_feasible(&inst)?.is_feasible(), "out_feasible")
    })
}

/// Whether a unit-speed open path visits every vertex inside its window.
/// Windows are given per vertex in ascending id order.
///
/// # Safety
/// `g` must be a live handle; arrays must hold `n` elements; `out_feasible`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn edc_tsptw_feasible(
    g: *const EdcGraph,
    earliest: *const f64,
    latest: *const f64,
    n: usize,
    out_feasible: *mut bool,
) -> EdcStatus {
    guard(|| {
        let g = &deref(g, "graph")?.0;
        let e = slice(earliest, n, "earliest")?;
        let l = slice(latest, n, "latest")?;
        let windows = (0..n)
            .map(|i| TimeWindow {
                earliest: e[i],
                latest: l[i],
            })
            .collect();
        let t = TsptwInstance::new(g.clone(), windows)?;
        write(out_feasible, offline::tsptw_feasible(&t)?.is_some(), "out_feasible")
    })
}
