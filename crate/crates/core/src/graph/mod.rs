//! Patrol graphs, their metric closure, and TSP tours over the closure.
//!
//! Vertices carry caller-chosen integer ids. Internally they are stored in
//! ascending id order and addressed by dense index `0..len()`; every other
//! module in the crate works with those indices.

mod tsp;

pub use tsp::{tour_period, tsp_tour, two_opt, Tour, TourTiming, TspMode, EXACT_TSP_CAP};

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{ensure_positive, EdcError, Result};

/// An undirected edge between two dense vertex indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// A connected, positively weighted undirected graph together with its
/// all-pairs shortest-path distances.
///
/// Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PatrolGraph {
    ids: Vec<usize>,
    index: HashMap<usize, usize>,
    edges: Vec<Edge>,
    dist: Vec<f64>,
}

/// Builds a [`PatrolGraph`] from a vertex id list and `(u, v, weight)` edge
/// triples given in vertex ids.
///
/// Parallel edges keep the lighter weight. Fails on an empty or duplicated
/// vertex list, unknown endpoints, self loops, non-positive weights and
/// disconnected graphs (the error names one unreachable pair).
pub fn metric_closure(vertices: &[usize], edges: &[(usize, usize, f64)]) -> Result<PatrolGraph> {
    if vertices.is_empty() {
        return Err(EdcError::validation("graph needs at least one vertex"));
    }
    let mut ids = vertices.to_vec();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(EdcError::validation(format!("duplicate vertex id {}", w[0])));
    }
    let index: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let n = ids.len();

    let mut dist = vec![f64::INFINITY; n * n];
    for i in 0..n {
        dist[i * n + i] = 0.0;
    }
    let mut stored = Vec::with_capacity(edges.len());
    for &(a, b, w) in edges {
        let lookup = |id: usize| {
            index
                .get(&id)
                .copied()
                .ok_or_else(|| EdcError::validation(format!("edge endpoint {id} is not a vertex")))
        };
        let (u, v) = (lookup(a)?, lookup(b)?);
        ensure_positive(&format!("weight of edge ({a}, {b})"), w)?;
        if u == v {
            return Err(EdcError::validation(format!("self loop at vertex {a}")));
        }
        if w < dist[u * n + v] {
            dist[u * n + v] = w;
            dist[v * n + u] = w;
        }
        stored.push(Edge { u, v, weight: w });
    }

    // Floyd-Warshall
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let via = dik + dist[k * n + j];
                if via < dist[i * n + j] {
                    dist[i * n + j] = via;
                }
            }
        }
    }

    for i in 0..n {
        for j in (i + 1)..n {
            if !dist[i * n + j].is_finite() {
                return Err(EdcError::Disconnected {
                    from: ids[i],
                    to: ids[j],
                });
            }
        }
    }

    Ok(PatrolGraph {
        ids,
        index,
        edges: stored,
        dist,
    })
}

impl PatrolGraph {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Vertex ids in ascending order; position equals dense index.
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> usize {
        self.ids[index]
    }

    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Original edges, endpoints as dense indices.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Shortest-path distance between two dense indices.
    #[inline]
    pub fn dist(&self, u: usize, v: usize) -> f64 {
        self.dist[u * self.ids.len() + v]
    }

    /// Sum of the closure distances over all ordered vertex pairs.
    pub fn closure_weight_sum(&self) -> f64 {
        self.dist.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heavy_edge_is_shortcut() {
        let g = metric_closure(&[0, 1, 2], &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 5.0)]).unwrap();
        assert_eq!(g.dist(0, 2), 2.0);
        assert_eq!(g.dist(2, 0), 2.0);
    }

    #[test]
    fn single_edge() {
        let g = metric_closure(&[7, 3], &[(3, 7, 3.0)]).unwrap();
        assert_eq!(g.ids(), &[3, 7]);
        assert_eq!(g.dist(g.index_of(3).unwrap(), g.index_of(7).unwrap()), 3.0);
    }

    #[test]
    fn disconnected_names_pair() {
        let err = metric_closure(&[0, 1, 2, 3], &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap_err();
        match err {
            EdcError::Disconnected { from, to } => {
                assert!(from < 2 && to >= 2, "pair ({from}, {to}) should straddle components")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_weights_and_ids() {
        assert!(matches!(
            metric_closure(&[0, 1], &[(0, 1, 0.0)]),
            Err(EdcError::Validation(_))
        ));
        assert!(matches!(
            metric_closure(&[0, 1], &[(0, 1, -2.0)]),
            Err(EdcError::Validation(_))
        ));
        assert!(matches!(
            metric_closure(&[0, 1], &[(0, 1, f64::NAN)]),
            Err(EdcError::Validation(_))
        ));
        assert!(metric_closure(&[0, 1], &[(0, 9, 1.0)]).is_err());
        assert!(metric_closure(&[0, 0], &[]).is_err());
        assert!(metric_closure(&[], &[]).is_err());
        assert!(metric_closure(&[0, 1], &[(1, 1, 1.0), (0, 1, 1.0)]).is_err());
    }

    #[test]
    fn parallel_edges_keep_minimum() {
        let g = metric_closure(&[0, 1], &[(0, 1, 4.0), (1, 0, 2.5)]).unwrap();
        assert_eq!(g.dist(0, 1), 2.5);
        assert_eq!(g.closure_weight_sum(), 5.0);
    }
}
