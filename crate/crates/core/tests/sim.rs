use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use edc_core::analytic::{confirm_prob_single, confirm_prob_tour, confirm_prob_two_robots, VertexParams};
use edc_core::graph::{metric_closure, tsp_tour, Tour, TspMode};
use edc_core::sim::{
    estimate_confirm_prob, generate_events, simulate_conditioned_cycle, simulate_patrol, simulate_specialized,
    EventSet, PatrolConfig, PatrolRun, RobotFleet,
};

/// Two vertices half a length unit apart: unit tour, both visited once a lap.
fn pair_tour() -> Tour {
    let g = metric_closure(&[0, 1], &[(0, 1, 0.5)]).unwrap();
    tsp_tour(&g, TspMode::Exact).unwrap()
}

/// Triangle with dyadic sides so visit times are exact in binary.
fn triangle_tour() -> Tour {
    let g = metric_closure(&[0, 1, 2], &[(0, 1, 1.0), (1, 2, 1.5), (2, 0, 1.5)]).unwrap();
    tsp_tour(&g, TspMode::Exact).unwrap()
}

fn assert_no_false_positives(run: &PatrolRun, t_crit: f64, events: &EventSet) {
    assert_eq!(run.stats.false_positives, 0);
    for (o, e) in run.outcomes.iter().zip(&events.events) {
        if let Some(c) = o.confirmed_at {
            assert!(e.is_true(t_crit), "event {} confirmed but false", e.id);
            let d = o.detected_at.unwrap();
            assert!(c - d >= t_crit && c <= e.t_f && d >= e.t_s);
        }
    }
}

#[test]
fn conditioned_single_robot_matches_formula() {
    let cases = [(1.0, 1.0, 1.0), (14.5, 1.0 / 75.0, 120.0), (15.0, 1.0 / 75.0, 120.0), (0.7, 2.0, 1.9)];
    for (i, &(tau, mu, t)) in cases.iter().enumerate() {
        let est = simulate_conditioned_cycle(tau, mu, t, &[0.0], 200_000, i as u64).unwrap();
        let p = confirm_prob_single(tau, mu, t).unwrap();
        assert!((est.estimate - p).abs() <= 3.0 * est.std_error, "{tau} {mu} {t}: {} vs {p}", est.estimate);
    }
}

#[test]
fn conditioned_two_robots_match_formula() {
    let cases = [(14.5, 1.0 / 75.0, 120.0, 7.25), (14.5, 1.0 / 75.0, 120.0, 4.0), (15.0, 1.0 / 75.0, 120.0, 7.5)];
    for (i, &(tau, mu, t, lag)) in cases.iter().enumerate() {
        let est = simulate_conditioned_cycle(tau, mu, t, &[0.0, lag], 200_000, 10 + i as u64).unwrap();
        let p = confirm_prob_two_robots(tau, mu, t, lag).unwrap();
        assert!((est.estimate - p).abs() <= 3.0 * est.std_error, "lag {lag}: {} vs {p}", est.estimate);
    }
}

#[test]
fn tiny_critical_time_still_needs_the_next_visit() {
    // Detection happens at the first visit; the confirming visit is one
    // period later, so the event must outlive it.
    let est = simulate_conditioned_cycle(1.0, 1.0, 1e-9, &[0.0], 200_000, 5).unwrap();
    let p = confirm_prob_single(1.0, 1.0, 1e-9).unwrap();
    assert!((p - ((-1.0f64).exp() - (-2.0f64).exp())).abs() < 1e-8);
    assert!((est.estimate - p).abs() <= 3.0 * est.std_error);
    assert!(est.estimate < 0.3);
}

#[test]
fn tour_formula_matches_per_vertex_monte_carlo() {
    let t = 1.0;
    let vertices = [(0.5, 1.0, 0.4), (2.0, 0.3, 0.9), (1.0, 3.0, 0.25)];
    let params: Vec<_> = vertices.iter().map(|&(l, m, _)| VertexParams::new(l, m).unwrap()).collect();
    let taus: Vec<f64> = vertices.iter().map(|v| v.2).collect();
    let formula = confirm_prob_tour(&params, &taus, t).unwrap();
    let total: f64 = vertices.iter().map(|v| v.0).sum();
    let (mut mc, mut var) = (0.0, 0.0);
    for (i, &(l, m, tau)) in vertices.iter().enumerate() {
        let est = simulate_conditioned_cycle(tau, m, t, &[0.0], 200_000, 20 + i as u64).unwrap();
        let w = l / total;
        mc += w * est.estimate;
        var += (w * est.std_error).powi(2);
    }
    assert!((mc - formula).abs() <= 3.0 * var.sqrt(), "{mc} vs {formula}");
}

fn pair_config(speed: f64, lambda: f64, mu: f64, t_crit: f64, horizon: f64) -> PatrolConfig {
    PatrolConfig {
        fleet: RobotFleet::single(pair_tour(), speed).unwrap(),
        params: vec![VertexParams::new(lambda, mu).unwrap(), VertexParams::new(0.0, mu).unwrap()],
        critical_time: t_crit,
        horizon,
    }
}

#[test]
fn free_running_single_robot_near_formula() {
    // lambda * tau = 0.04 keeps the blocking bias small.
    for (tau, mu, t) in [(1.0, 1.0, 1.3), (0.8, 0.5, 2.0)] {
        let lambda = 0.04 / tau;
        let cfg = pair_config(1.0 / tau, lambda, mu, t, 200_000.0);
        let stats = estimate_confirm_prob(&cfg, 8, 100).unwrap();
        let p = confirm_prob_single(tau, mu, t).unwrap();
        assert!(stats.true_events > 1000);
        assert_eq!(stats.false_positives, 0);
        assert!(
            (stats.estimate - p).abs() <= 3.0 * stats.std_error() + 0.01,
            "{tau}: {} vs {p}",
            stats.estimate
        );
    }
}

#[test]
fn free_running_tour_near_formula() {
    let tour = triangle_tour();
    let speed = 4.0;
    let tau = tour.length() / speed;
    let (mu, t) = (0.8, 1.1);
    let lambdas = [0.03, 0.05, 0.02];
    let params: Vec<_> = lambdas.iter().map(|&l| VertexParams::new(l / tau, mu).unwrap()).collect();
    let cfg = PatrolConfig {
        fleet: RobotFleet::single(tour, speed).unwrap(),
        params: params.clone(),
        critical_time: t,
        horizon: 100_000.0,
    };
    let stats = estimate_confirm_prob(&cfg, 8, 7).unwrap();
    let p = confirm_prob_tour(&params, &[tau; 3], t).unwrap();
    assert_eq!(stats.false_positives, 0);
    assert!((stats.estimate - p).abs() <= 3.0 * stats.std_error() + 0.01, "{} vs {p}", stats.estimate);
}

#[test]
fn arrivals_are_uniform_without_blocking() {
    // Near-instant departures leave a plain Poisson stream, whose points in
    // a window are uniform given their count.
    let params = [VertexParams::new(1.0, 1e9).unwrap()];
    let set = generate_events(&params, 5_000.0, 42).unwrap();
    let (a, b) = (1_000.0, 4_000.0);
    let mut u: Vec<f64> = set
        .events
        .iter()
        .filter(|e| e.t_s >= a && e.t_s <= b)
        .map(|e| (e.t_s - a) / (b - a))
        .collect();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max);
    // Asymptotic critical value at significance 0.01.
    assert!(d * n.sqrt() < 1.63, "KS statistic {}", d * n.sqrt());
}

#[test]
fn replications_are_deterministic() {
    let cfg = pair_config(1.0, 0.05, 1.0, 1.0, 5_000.0);
    let a = estimate_confirm_prob(&cfg, 6, 9).unwrap();
    let b = estimate_confirm_prob(&cfg, 6, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn one_replication_is_one_direct_run() {
    let cfg = pair_config(1.0, 0.05, 1.0, 1.0, 5_000.0);
    let pooled = estimate_confirm_prob(&cfg, 1, 77).unwrap();
    let events = generate_events(&cfg.params, cfg.horizon, 77).unwrap();
    let run = simulate_patrol(&cfg.fleet, &events, cfg.critical_time).unwrap();
    assert_eq!(
        (pooled.true_events, pooled.confirmed_true, pooled.false_positives),
        (run.stats.true_events, run.stats.confirmed_true, run.stats.false_positives)
    );
    assert!(estimate_confirm_prob(&cfg, 0, 77).is_err());
}

#[test]
fn seeds_agree_and_intervals_shrink() {
    let cfg = pair_config(1.0, 0.04, 1.0, 1.0, 50_000.0);
    let a = estimate_confirm_prob(&cfg, 10, 1_000).unwrap();
    let b = estimate_confirm_prob(&cfg, 10, 2_000).unwrap();
    let se = (a.std_error().powi(2) + b.std_error().powi(2)).sqrt();
    assert!((a.estimate - b.estimate).abs() <= 3.0 * se);

    let doubled = estimate_confirm_prob(&cfg, 20, 1_000).unwrap();
    let ratio = doubled.ci_halfwidth / a.ci_halfwidth;
    let expected = std::f64::consts::FRAC_1_SQRT_2;
    assert!((ratio - expected).abs() <= 0.2 * expected, "ratio {ratio}");
}

/// Detection lags plus their replays `T` later folded onto the cycle.
fn combined_lags(lags: &[f64], t_crit: f64, period: f64) -> Vec<f64> {
    let mut all: Vec<f64> = lags.iter().flat_map(|&l| [l, (l + t_crit) % period]).collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

#[test]
fn specialized_fleet_confirms_exactly_the_long_stays() {
    let tour = triangle_tour();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for run_idx in 0..50u64 {
        let speed = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let period = tour.length() / speed;
        // Quarter-unit offsets keep every visit time exact.
        let slots = (period * 4.0) as usize;
        let mut lags = vec![0.0];
        if rng.random_bool(0.5) {
            lags.push(rng.random_range(1..slots) as f64 / 4.0);
        }
        let t_crit = rng.random_range(1..=16) as f64 / 4.0;
        let params: Vec<_> = (0..3)
            .map(|_| VertexParams::new(rng.random_range(0.01..0.2), rng.random_range(0.1..2.0)).unwrap())
            .collect();
        let events = generate_events(&params, 2_000.0, run_idx).unwrap();
        let fleet = RobotFleet::new(tour.clone(), speed, lags.clone()).unwrap();
        let special = simulate_specialized(&fleet, &events, t_crit).unwrap();
        assert_no_false_positives(&special, t_crit, &events);
        // Events ending past the horizon are outside the statistics and the
        // run may stop before their confirming visit.
        for (o, e) in special.outcomes.iter().zip(&events.events).filter(|(o, _)| o.counted) {
            let expected = match o.detected_at {
                Some(d) => e.t_f >= d + t_crit,
                None => false,
            };
            assert_eq!(o.confirmed_at.is_some(), expected, "run {run_idx} {e:?} {o:?} T={t_crit} lags={lags:?} speed={speed}");
        }

        let dual_fleet = RobotFleet::new(tour.clone(), speed, combined_lags(&lags, t_crit, period)).unwrap();
        let dual = simulate_patrol(&dual_fleet, &events, t_crit).unwrap();
        assert_no_false_positives(&dual, t_crit, &events);
        for (s, d) in special.outcomes.iter().zip(&dual.outcomes).filter(|(s, _)| s.counted) {
            if s.confirmed_at.is_some() {
                assert!(d.confirmed_at.is_some(), "run {run_idx} event {}", s.event_id);
            }
        }
        assert!(special.stats.confirmed_true <= dual.stats.confirmed_true);
    }
}
