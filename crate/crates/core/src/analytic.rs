//! Closed-form confirmation probabilities for periodic patrols and the
//! policies built on them.
//!
//! A vertex visited every `tau` time units sees an event that arrived
//! uniformly in the last gap between visits. With `n` the integer satisfying
//! `n * tau < T <= (n + 1) * tau`, a single robot detects it at the end of that
//! gap and can only confirm it `n + 1` periods later. The two-robot formulas
//! split the cycle at the second robot's lag and handle the four
//! detection/confirmation sub-cases.
//!
//! All evaluations use `expm1` products whose exponents are non-positive, so
//! nothing overflows for large `mu * tau`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, EdcError, Result};
use crate::REL_TOL;

/// Arrival and departure rates of events at one vertex.
///
/// `lambda` may be zero for a vertex where events never arrive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexParams {
    pub lambda: f64,
    pub mu: f64,
}

impl VertexParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(EdcError::validation(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        ensure_positive("mu", mu)?;
        Ok(VertexParams { lambda, mu })
    }
}

/// True when `value` is an integer multiple (>= 1) of `unit` within the
/// relative tolerance.
pub fn is_multiple(value: f64, unit: f64) -> bool {
    let ratio = value / unit;
    let k = ratio.round();
    k >= 1.0 && (ratio - k).abs() <= REL_TOL * ratio
}

/// Position of the critical time inside the visit grid.
///
/// `n` satisfies `n * tau < T <= (n + 1) * tau`; `head = T - n * tau` lies in
/// `(0, tau]` and `tail = (n + 1) * tau - T` in `[0, tau)`, with
/// `head + tail == tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSplit {
    pub n: u64,
    pub head: f64,
    pub tail: f64,
}

impl CycleSplit {
    pub fn new(t_crit: f64, tau: f64) -> Result<Self> {
        ensure_positive("critical time", t_crit)?;
        ensure_positive("tau", tau)?;
        let ratio = t_crit / tau;
        if is_multiple(t_crit, tau) {
            return Ok(CycleSplit {
                n: ratio.round() as u64 - 1,
                head: tau,
                tail: 0.0,
            });
        }
        let n = ratio.floor();
        // Fused multiply-add keeps T - n tau to a single rounding.
        let head = (-n).mul_add(tau, t_crit).clamp(0.0, tau);
        Ok(CycleSplit {
            n: n as u64,
            head,
            tail: tau - head,
        })
    }
}

/// The integer `n` with `n * tau < T <= (n + 1) * tau`.
pub fn n_of(t_crit: f64, tau: f64) -> Result<u64> {
    CycleSplit::new(t_crit, tau).map(|s| s.n)
}

/// `(1 - e^{-x}) / x`, continuous at zero.
fn decay_ratio(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// Probability that a true event at a vertex visited every `tau` by a single
/// robot gets confirmed.
pub fn confirm_prob_single(tau: f64, mu: f64, t_crit: f64) -> Result<f64> {
    ensure_positive("mu", mu)?;
    let split = CycleSplit::new(t_crit, tau)?;
    // e^{-mu((n+2)tau - T)} (e^{mu tau} - 1) / (mu tau), rewritten with
    // (n+2)tau - T = tau + tail.
    Ok((-mu * split.tail).exp() * decay_ratio(mu * tau))
}

/// Probability of confirming a true event over a whole tour: per-vertex
/// probabilities weighted by arrival rates.
pub fn confirm_prob_tour(params: &[VertexParams], taus: &[f64], t_crit: f64) -> Result<f64> {
    if params.is_empty() {
        return Err(EdcError::validation("no vertices given"));
    }
    if params.len() != taus.len() {
        return Err(EdcError::validation(format!(
            "{} vertex parameter sets but {} periods",
            params.len(),
            taus.len()
        )));
    }
    let total: f64 = params.iter().map(|p| p.lambda).sum();
    if !(total > 0.0) {
        return Err(EdcError::validation("arrival rates sum to zero"));
    }
    let mut acc = 0.0;
    for (p, &tau) in params.iter().zip(taus) {
        acc += confirm_prob_single(tau, p.mu, t_crit)? * p.lambda;
    }
    Ok(acc / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Early,
    Middle,
    Late,
}

/// The three pieces of the two-robot probability as a function of the lag.
struct TwoRobotPieces {
    mu: f64,
    tau: f64,
    split: CycleSplit,
}

impl TwoRobotPieces {
    fn eval(&self, branch: Branch, lag: f64) -> f64 {
        let (mu, tau) = (self.mu, self.tau);
        let CycleSplit { head, tail, .. } = self.split;
        let x = mu * tau;
        match branch {
            // e^{-mu((n+1)tau - T)} e^{mu lag} (1 - e^{-mu tau}) / (mu tau)
            Branch::Early => (-mu * (tail - lag)).exp() * decay_ratio(x),
            // e^{-mu((n+1)tau + lag - T)} (e^{mu tau} - 1) / (mu tau)
            Branch::Late => (-mu * (lag - head)).exp() * decay_ratio(x),
            Branch::Middle => {
                let near = -(-mu * lag).exp_m1();
                let far = -(-mu * (tau - lag)).exp_m1();
                if head <= tail {
                    // e^{-mu tail} (e^{mu lag} + e^{mu(tau - lag)} - 2) / (mu tau)
                    ((-mu * (tail - lag)).exp() * near + (-mu * (lag - head)).exp() * far) / x
                } else {
                    // e^{-mu tail} (2 - e^{-mu lag} - e^{-mu(tau - lag)}) / (mu tau)
                    (-mu * tail).exp() * (near + far) / x
                }
            }
        }
    }
}

/// Probability that two robots sharing a tour of period `tau`, the second
/// `lag` behind the first, confirm a true event.
///
/// The function is piecewise with jumps at `lag = T - n tau` and
/// `lag = (n+1) tau - T`; on those points the larger adjacent piece is
/// returned, which is the value the visit schedule actually attains.
pub fn confirm_prob_two_robots(tau: f64, mu: f64, t_crit: f64, lag: f64) -> Result<f64> {
    ensure_positive("mu", mu)?;
    let split = CycleSplit::new(t_crit, tau)?;
    if !(lag > 0.0 && lag < tau) {
        return Err(EdcError::validation(format!(
            "lag must lie in (0, {tau}), got {lag}"
        )));
    }
    let pieces = TwoRobotPieces { mu, tau, split };
    let lo = split.head.min(split.tail);
    let hi = split.head.max(split.tail);
    let tol = REL_TOL * tau;
    let at_lo = (lag - lo).abs() <= tol;
    let at_hi = (lag - hi).abs() <= tol;

    let mut best = f64::NEG_INFINITY;
    let mut consider = |b: Branch| best = best.max(pieces.eval(b, lag));
    if at_lo || at_hi {
        consider(Branch::Middle);
        if at_lo {
            consider(Branch::Early);
        }
        if at_hi {
            consider(Branch::Late);
        }
    } else if lag < lo {
        consider(Branch::Early);
    } else if lag > hi {
        consider(Branch::Late);
    } else {
        consider(Branch::Middle);
    }
    Ok(best)
}

/// Lags at which the two-robot probability can reach its maximum for a fixed
/// period: `tau / 2`, `T - n tau`, `(n+1) tau - T` and `(n+2) tau - T`
/// wrapped onto the cycle, restricted to the open interval `(0, tau)`.
pub fn optimal_lag_candidates(tau: f64, t_crit: f64) -> Result<Vec<f64>> {
    let split = CycleSplit::new(t_crit, tau)?;
    let tol = REL_TOL * tau;
    let wrapped = (split.tail + tau) % tau;
    let mut out: Vec<f64> = Vec::with_capacity(4);
    for lag in [tau / 2.0, split.head, split.tail, wrapped] {
        if lag <= tol || lag >= tau - tol {
            continue;
        }
        if out.iter().any(|&l| (l - lag).abs() <= tol) {
            continue;
        }
        out.push(lag);
    }
    Ok(out)
}

/// Best candidate lag and its probability for a fixed period.
pub fn best_two_robot_lag(tau: f64, mu: f64, t_crit: f64) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for lag in optimal_lag_candidates(tau, t_crit)? {
        let p = confirm_prob_two_robots(tau, mu, t_crit, lag)?;
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((lag, p));
        }
    }
    // tau / 2 always survives the clipping, so the list is never empty.
    Ok(best.expect("at least one lag candidate"))
}

/// One configuration a policy evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub tau: f64,
    pub lag: Option<f64>,
    pub probability: f64,
    /// False when the period would need more than the maximum speed.
    pub feasible: bool,
}

/// Chosen patrol period, speed and (for two robots) lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyResult {
    pub tau: f64,
    pub speed: f64,
    pub lag: Option<f64>,
    pub probability: f64,
    pub candidate_log: Vec<Candidate>,
}

/// Smallest `unit / k >= tau_min` over integers `k >= 1`, or `None` when
/// `tau_min` already exceeds `unit`.
fn slowest_divisor_at_least(unit: f64, tau_min: f64) -> Option<f64> {
    if is_multiple(unit, tau_min) {
        return Some(tau_min);
    }
    let k = (unit / tau_min).floor();
    (k >= 1.0).then(|| unit / k)
}

fn same_period(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.max(b)
}

/// Single-robot policy: compare driving the TSP tour at full speed with
/// slowing down until the critical time is a multiple of the period.
pub fn optimize_single_robot(
    tsp_length: f64,
    v_max: f64,
    mu: f64,
    t_crit: f64,
) -> Result<PolicyResult> {
    ensure_positive("tour length", tsp_length)?;
    ensure_positive("maximum speed", v_max)?;
    let tau_min = tsp_length / v_max;

    let mut log = vec![Candidate {
        tau: tau_min,
        lag: None,
        probability: confirm_prob_single(tau_min, mu, t_crit)?,
        feasible: true,
    }];
    if let Some(tau_peak) = slowest_divisor_at_least(t_crit, tau_min) {
        if !same_period(tau_peak, tau_min) {
            log.push(Candidate {
                tau: tau_peak,
                lag: None,
                probability: confirm_prob_single(tau_peak, mu, t_crit)?,
                feasible: true,
            });
        }
    }
    let best = pick_best(&log);
    Ok(PolicyResult {
        tau: best.tau,
        speed: tsp_length / best.tau,
        lag: None,
        probability: best.probability,
        candidate_log: log,
    })
}

fn pick_best(log: &[Candidate]) -> Candidate {
    let mut best = log[0];
    for c in &log[1..] {
        if c.feasible && c.probability > best.probability {
            best = *c;
        }
    }
    best
}

/// Two-robot policy: best candidate lag at full speed versus equal spacing
/// on the slowest period that divides `2T`.
///
/// The log also records the faster divisor of `2T` (one step below
/// `tau_min`), marked infeasible because it exceeds the speed limit.
pub fn optimize_two_robots(
    tsp_length: f64,
    v_max: f64,
    mu: f64,
    t_crit: f64,
) -> Result<PolicyResult> {
    ensure_positive("tour length", tsp_length)?;
    ensure_positive("maximum speed", v_max)?;
    let tau_min = tsp_length / v_max;

    let mut log = Vec::new();
    for lag in optimal_lag_candidates(tau_min, t_crit)? {
        log.push(Candidate {
            tau: tau_min,
            lag: Some(lag),
            probability: confirm_prob_two_robots(tau_min, mu, t_crit, lag)?,
            feasible: true,
        });
    }
    let two_t = 2.0 * t_crit;
    if let Some(tau_n) = slowest_divisor_at_least(two_t, tau_min) {
        if !same_period(tau_n, tau_min) {
            log.push(Candidate {
                tau: tau_n,
                lag: Some(tau_n / 2.0),
                probability: confirm_prob_two_robots(tau_n, mu, t_crit, tau_n / 2.0)?,
                feasible: true,
            });
        }
    }
    let k_fast = (two_t / tau_min).floor() + 1.0;
    let tau_fast = two_t / k_fast;
    if tau_fast < tau_min && !same_period(tau_fast, tau_min) {
        log.push(Candidate {
            tau: tau_fast,
            lag: Some(tau_fast / 2.0),
            probability: confirm_prob_two_robots(tau_fast, mu, t_crit, tau_fast / 2.0)?,
            feasible: false,
        });
    }

    let best = pick_best(&log);
    Ok(PolicyResult {
        tau: best.tau,
        speed: tsp_length / best.tau,
        lag: best.lag,
        probability: best.probability,
        candidate_log: log,
    })
}

/// Period and successive gaps between `m` robots on one tour. `gaps[i]` is
/// the time from robot `i` to robot `i + 1`; the last gap closes the cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spacing {
    pub period: f64,
    pub gaps: Vec<f64>,
}

impl Spacing {
    /// Time offsets of each robot behind the first, starting at 0.
    pub fn offsets(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.gaps.len());
        for g in &self.gaps {
            out.push(acc);
            acc += g;
        }
        out
    }
}

/// Heuristic spacing of `m >= 2` robots on a common tour of period `tau`.
pub fn m_robot_spacing(tau: f64, t_crit: f64, m: usize) -> Result<Spacing> {
    ensure_positive("tau", tau)?;
    ensure_positive("critical time", t_crit)?;
    if m < 2 {
        return Err(EdcError::validation(format!("need at least 2 robots, got {m}")));
    }
    let mf = m as f64;
    let equal = |period: f64| Spacing {
        period,
        gaps: vec![period / mf; m],
    };
    if is_multiple(tau / mf, t_crit) {
        return Ok(equal(tau));
    }
    let span = mf * t_crit;
    if tau < span {
        let period = slowest_divisor_at_least(span, tau).expect("tau < m T");
        return Ok(equal(period));
    }
    let mut gaps = vec![t_crit; m - 1];
    gaps.push(tau - (mf - 1.0) * t_crit);
    Ok(Spacing { period: tau, gaps })
}
