use serde::{Deserialize, Serialize};

use super::PatrolGraph;
use crate::error::{ensure_positive, EdcError, Result};
use crate::REL_TOL;

/// Largest vertex count accepted by the subset dynamic program.
pub const EXACT_TSP_CAP: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TspMode {
    /// Held-Karp over vertex subsets, at most [`EXACT_TSP_CAP`] vertices.
    Exact,
    /// Nearest neighbour from the lowest vertex, then 2-opt to a local optimum.
    Heuristic,
}

/// A closed tour over the metric closure.
///
/// `phases[i]` is the distance travelled from `order[0]` when `order[i]` is
/// reached, so `phases[0] == 0` and the sequence is strictly increasing
/// below `length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    order: Vec<usize>,
    length: f64,
    phases: Vec<f64>,
}

impl Tour {
    /// Builds a tour visiting `order` cyclically. Every index must be a
    /// vertex of `g` and appear once.
    pub fn from_order(g: &PatrolGraph, order: Vec<usize>) -> Result<Tour> {
        if order.is_empty() {
            return Err(EdcError::validation("tour must visit at least one vertex"));
        }
        let mut seen = vec![false; g.len()];
        for &v in &order {
            if v >= g.len() {
                return Err(EdcError::validation(format!("tour index {v} out of range")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(EdcError::validation(format!(
                    "tour visits vertex {} twice",
                    g.id(v)
                )));
            }
        }
        let mut phases = Vec::with_capacity(order.len());
        let mut acc = 0.0;
        for (i, &v) in order.iter().enumerate() {
            if i > 0 {
                acc += g.dist(order[i - 1], v);
            }
            phases.push(acc);
        }
        let length = acc + g.dist(order[order.len() - 1], order[0]);
        Ok(Tour {
            order,
            length,
            phases,
        })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Distance offset at which `vertex` is visited, if it is on the tour.
    pub fn phase_of(&self, vertex: usize) -> Option<f64> {
        self.order
            .iter()
            .position(|&v| v == vertex)
            .map(|i| self.phases[i])
    }

    pub fn contains(&self, vertex: usize) -> bool {
        self.order.contains(&vertex)
    }
}

/// Computes a TSP tour over every vertex of `g`.
pub fn tsp_tour(g: &PatrolGraph, mode: TspMode) -> Result<Tour> {
    match mode {
        TspMode::Exact => {
            if g.len() > EXACT_TSP_CAP {
                return Err(EdcError::SizeCap {
                    what: "exact TSP vertex count",
                    limit: EXACT_TSP_CAP,
                    got: g.len(),
                });
            }
            Tour::from_order(g, held_karp(g))
        }
        TspMode::Heuristic => {
            let mut order = nearest_neighbor(g);
            two_opt(g, &mut order);
            Tour::from_order(g, order)
        }
    }
}

fn held_karp(g: &PatrolGraph) -> Vec<usize> {
    let n = g.len();
    if n <= 3 {
        return (0..n).collect();
    }
    // Vertex 0 is the fixed start; subsets range over vertices 1..n.
    let m = n - 1;
    let full = 1usize << m;
    let mut cost = vec![f64::INFINITY; full * m];
    let mut parent = vec![usize::MAX; full * m];
    for j in 0..m {
        cost[(1 << j) * m + j] = g.dist(0, j + 1);
    }
    for mask in 1..full {
        for last in 0..m {
            if mask & (1 << last) == 0 {
                continue;
            }
            let here = cost[mask * m + last];
            if !here.is_finite() {
                continue;
            }
            for next in 0..m {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let nmask = mask | (1 << next);
                let c = here + g.dist(last + 1, next + 1);
                if c < cost[nmask * m + next] {
                    cost[nmask * m + next] = c;
                    parent[nmask * m + next] = last;
                }
            }
        }
    }
    let last_mask = full - 1;
    let mut best = (f64::INFINITY, 0);
    for last in 0..m {
        let c = cost[last_mask * m + last] + g.dist(last + 1, 0);
        if c < best.0 {
            best = (c, last);
        }
    }
    let mut rev = Vec::with_capacity(n);
    let (mut mask, mut cur) = (last_mask, best.1);
    while cur != usize::MAX {
        rev.push(cur + 1);
        let p = parent[mask * m + cur];
        mask &= !(1 << cur);
        cur = p;
    }
    rev.push(0);
    rev.reverse();
    rev
}

// Ties go to the lowest index, which is also the lowest vertex id.
fn nearest_neighbor(g: &PatrolGraph) -> Vec<usize> {
    let n = g.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = 0;
    visited[0] = true;
    order.push(0);
    for _ in 1..n {
        let mut best: Option<(f64, usize)> = None;
        for (v, _) in visited.iter().enumerate().filter(|(_, seen)| !**seen) {
            let d = g.dist(cur, v);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, v));
            }
        }
        let (_, v) = best.expect("unvisited vertex remains");
        visited[v] = true;
        order.push(v);
        cur = v;
    }
    order
}

fn cycle_length(g: &PatrolGraph, order: &[usize]) -> f64 {
    let n = order.len();
    (0..n).map(|i| g.dist(order[i], order[(i + 1) % n])).sum()
}

/// Improves `order` in place with 2-opt moves until none shortens the cycle
/// by more than the relative tolerance. `order[0]` stays first.
pub fn two_opt(g: &PatrolGraph, order: &mut [usize]) {
    let n = order.len();
    if n < 4 {
        return;
    }
    loop {
        let threshold = REL_TOL * cycle_length(g, order).max(f64::MIN_POSITIVE);
        let mut improved = false;
        for i in 0..n - 2 {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (order[i], order[i + 1]);
                let (c, d) = (order[j], order[(j + 1) % n]);
                let delta = g.dist(a, c) + g.dist(b, d) - g.dist(a, b) - g.dist(c, d);
                if delta < -threshold {
                    order[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Period and per-vertex visit times of a tour driven at constant speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TourTiming {
    pub period: f64,
    /// Aligned with [`Tour::order`].
    pub visit_times: Vec<f64>,
}

pub fn tour_period(tour: &Tour, speed: f64) -> Result<TourTiming> {
    ensure_positive("speed", speed)?;
    Ok(TourTiming {
        period: tour.length() / speed,
        visit_times: tour.phases().iter().map(|p| p / speed).collect(),
    })
}
