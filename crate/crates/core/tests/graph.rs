use itertools::Itertools;
use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use proptest::prelude::*;

use edc_core::graph::{metric_closure, tour_period, tsp_tour, two_opt, PatrolGraph, Tour, TspMode};
use edc_core::EdcError;

/// Connected random graph: a random spanning tree plus extra edges.
fn connected_graph(max_n: usize) -> impl Strategy<Value = (Vec<usize>, Vec<(usize, usize, f64)>)> {
    (2..=max_n).prop_flat_map(|n| {
        let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
        let tree_w = prop::collection::vec(0.1f64..10.0, n - 1);
        let extra = prop::collection::vec((0..n, 0..n, 0.1f64..10.0), 0..2 * n);
        (Just(n), parents, tree_w, extra).prop_map(|(n, parents, tree_w, extra)| {
            // Sparse, non-contiguous ids exercise the id-to-index mapping.
            let id = |i: usize| 3 * i + 7;
            let mut edges: Vec<_> = parents
                .iter()
                .zip(&tree_w)
                .enumerate()
                .map(|(i, (&p, &w))| (id(i + 1), id(p), w))
                .collect();
            edges.extend(extra.into_iter().filter(|(u, v, _)| u != v).map(|(u, v, w)| (id(u), id(v), w)));
            ((0..n).map(id).rev().collect(), edges)
        })
    })
}

fn brute_force_tsp(g: &PatrolGraph) -> f64 {
    let n = g.len();
    if n <= 1 {
        return 0.0;
    }
    (1..n)
        .permutations(n - 1)
        .map(|rest| {
            let mut order = vec![0];
            order.extend(rest);
            (0..n).map(|i| g.dist(order[i], order[(i + 1) % n])).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_matches_dijkstra((ids, edges) in connected_graph(8)) {
        let g = metric_closure(&ids, &edges).unwrap();
        let mut pg = UnGraph::<usize, f64>::new_undirected();
        let nodes: Vec<NodeIndex> = g.ids().iter().map(|&id| pg.add_node(id)).collect();
        for &(u, v, w) in &edges {
            pg.add_edge(nodes[g.index_of(u).unwrap()], nodes[g.index_of(v).unwrap()], w);
        }
        for s in 0..g.len() {
            let d = dijkstra(&pg, nodes[s], None, |e| *e.weight());
            for t in 0..g.len() {
                prop_assert!(close(g.dist(s, t), d[&nodes[t]]));
            }
        }
    }

    #[test]
    fn closure_is_a_metric((ids, edges) in connected_graph(50)) {
        let g = metric_closure(&ids, &edges).unwrap();
        let n = g.len();
        for i in 0..n {
            prop_assert_eq!(g.dist(i, i), 0.0);
            for j in 0..n {
                prop_assert_eq!(g.dist(i, j), g.dist(j, i));
                if i != j {
                    prop_assert!(g.dist(i, j) > 0.0);
                }
                for k in 0..n {
                    prop_assert!(g.dist(i, j) <= g.dist(i, k) + g.dist(k, j) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn exact_tour_is_optimal((ids, edges) in connected_graph(7)) {
        let g = metric_closure(&ids, &edges).unwrap();
        let t = tsp_tour(&g, TspMode::Exact).unwrap();
        prop_assert!(close(t.length(), brute_force_tsp(&g)));
    }

    #[test]
    fn heuristic_never_beats_exact((ids, edges) in connected_graph(9)) {
        let g = metric_closure(&ids, &edges).unwrap();
        let exact = tsp_tour(&g, TspMode::Exact).unwrap();
        let heur = tsp_tour(&g, TspMode::Heuristic).unwrap();
        prop_assert!(heur.length() >= exact.length() - 1e-9 * exact.length());
        let mut seen = heur.order().to_vec();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..g.len()).collect::<Vec<_>>());
    }

    #[test]
    fn two_opt_never_lengthens((ids, edges) in connected_graph(12), rot in 0usize..12) {
        let g = metric_closure(&ids, &edges).unwrap();
        let n = g.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.rotate_left(rot % n);
        let before = Tour::from_order(&g, order.clone()).unwrap().length();
        two_opt(&g, &mut order);
        let after = Tour::from_order(&g, order.clone()).unwrap();
        prop_assert!(after.length() <= before + 1e-9 * before);
        prop_assert_eq!(after.order()[0], rot % n);
    }

    #[test]
    fn tour_length_is_rotation_invariant((ids, edges) in connected_graph(10), rot in 0usize..10) {
        let g = metric_closure(&ids, &edges).unwrap();
        let base = tsp_tour(&g, TspMode::Heuristic).unwrap();
        let mut order = base.order().to_vec();
        let k = rot % order.len();
        order.rotate_left(k);
        let rotated = Tour::from_order(&g, order).unwrap();
        prop_assert!(close(base.length(), rotated.length()));
    }

    #[test]
    fn phases_accumulate_edge_lengths((ids, edges) in connected_graph(10), speed in 0.1f64..10.0) {
        let g = metric_closure(&ids, &edges).unwrap();
        let t = tsp_tour(&g, TspMode::Heuristic).unwrap();
        let o = t.order();
        prop_assert_eq!(t.phases()[0], 0.0);
        for i in 1..o.len() {
            prop_assert!(close(t.phases()[i] - t.phases()[i - 1], g.dist(o[i - 1], o[i])));
        }
        let timing = tour_period(&t, speed).unwrap();
        prop_assert!(close(timing.period * speed, t.length()));
        for (v, p) in timing.visit_times.iter().zip(t.phases()) {
            prop_assert!(close(v * speed, *p));
        }
    }
}

/// Corners and side midpoints of a 300 m by 135 m lot.
fn parking_lot() -> PatrolGraph {
    metric_closure(
        &[0, 1, 2, 3, 4, 5, 6, 7],
        &[
            (0, 1, 150.0),
            (1, 2, 150.0),
            (2, 3, 67.5),
            (3, 4, 67.5),
            (4, 5, 150.0),
            (5, 6, 150.0),
            (6, 7, 67.5),
            (7, 0, 67.5),
        ],
    )
    .unwrap()
}

#[test]
fn parking_lot_tour_is_the_perimeter() {
    let g = parking_lot();
    for mode in [TspMode::Exact, TspMode::Heuristic] {
        let t = tsp_tour(&g, mode).unwrap();
        assert!(close(t.length(), 870.0), "{mode:?}: {}", t.length());
    }
    // 1 m/s in metres per minute gives a 14.5 minute period.
    let t = tsp_tour(&g, TspMode::Exact).unwrap();
    assert!(close(tour_period(&t, 60.0).unwrap().period, 14.5));
}

#[test]
fn disconnected_graph_names_the_pair() {
    let err = metric_closure(&[1, 2, 3, 4], &[(1, 2, 1.0), (3, 4, 1.0)]).unwrap_err();
    assert!(matches!(err, EdcError::Disconnected { .. }));
}

#[test]
fn exact_solver_cap() {
    let ids: Vec<usize> = (0..14).collect();
    let edges: Vec<_> = (0..13).map(|i| (i, i + 1, 1.0)).collect();
    let g = metric_closure(&ids, &edges).unwrap();
    assert!(matches!(tsp_tour(&g, TspMode::Exact), Err(EdcError::SizeCap { .. })));
    assert!(tsp_tour(&g, TspMode::Heuristic).is_ok());
}
