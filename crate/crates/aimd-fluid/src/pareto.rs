//! Closed-form cycle averages and the goodput/delay trade-off.
//!
//! Under `q = μT/m > A*₂` every loss event costs exactly one reduction for
//! any buffer size, and the limit cycle's long-run averages — sending rate
//! `λ̄`, goodput `ḡ`, queue occupancy `x̄` and period `T_cycle` — have closed
//! forms in two branches split at the full-utilization knee `B = m·b₀,₁`:
//!
//! * `B ≤ m·b₀,₁` — the cycle drains the queue and idles the link for part
//!   of each period, so `ḡ < μ`; phase lengths `S_CD` (refill) and `S_AB`
//!   (drain) anchor the formulas.
//! * `B > m·b₀,₁` — the queue never empties; `ḡ = μ` exactly while `λ̄`
//!   stays above μ and decays toward it as the buffer grows.
//!
//! Sweeping the buffer traces the goodput/delay Pareto frontier;
//! [`solve_constraint`] answers the two constrained sizing problems on it.

use serde::{Deserialize, Serialize};

use crate::classifier::unclipped_return_time;
use crate::constants::{a_star, critical_buffer, solve_theta};
use crate::error::{Error, Result};
use crate::params::FluidParams;
use crate::roots::brent;
use crate::segment::Segment;

/// Which branch of the average formulas produced a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Queue-draining branch, `B ≤ m·b₀,₁`.
    Clipped,
    /// Full-utilization branch, `B > m·b₀,₁`.
    Unclipped,
    /// Simulator-measured averages (no closed form applies).
    Empirical,
}

/// One point of the buffer sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    /// Buffer size B (data units).
    pub buffer: f64,
    /// Average sending rate (data units/s).
    pub lambda_bar: f64,
    /// Average goodput (data units/s), never above μ.
    pub g_bar: f64,
    /// Average queue occupancy (data units).
    pub x_bar: f64,
    /// Cycle duration (seconds).
    pub t_cycle: f64,
    /// Cycle duration in RTT-counting time.
    pub s_cycle: f64,
    /// Refill phase length (queue-draining branch only).
    pub s_cd: Option<f64>,
    /// Drain phase length (queue-draining branch only).
    pub s_ab: Option<f64>,
    /// Return time of the full-utilization cycle (other branch only).
    pub s1: Option<f64>,
    pub regime: Regime,
}

/// The buffer sweep with its full-utilization knee.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoSet {
    /// Physical parameters; the `buffer` field is ignored (swept).
    pub params: FluidParams,
    /// Smallest buffer with ḡ = μ, i.e. `m·b₀,₁`.
    pub knee_buffer: f64,
    pub knee: ParetoPoint,
    pub points: Vec<ParetoPoint>,
}

/// Constraint of the two sizing problems on the frontier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Constraint {
    /// Maximize goodput subject to `x̄ ≤` this queue bound.
    #[serde(rename = "xbar_max")]
    MaxQueue(f64),
    /// Minimize queue subject to `ḡ ≥` this goodput floor.
    #[serde(rename = "gbar_min")]
    MinGoodput(f64),
}

fn hypothesis(params: &FluidParams) -> Result<f64> {
    let np = params.normalize()?;
    let a2 = a_star(np.beta, 2)?.finite().expect("A*_2 is finite");
    if np.q <= a2 {
        return Err(Error::OutsideSingleLossRegime { q: np.q, a_star_2: a2 });
    }
    Ok(a2)
}

/// The full-utilization knee `m·b₀,₁` of the sweep.
pub fn knee_buffer(params: &FluidParams) -> Result<f64> {
    hypothesis(params)?;
    let np = params.normalize()?;
    let theta = solve_theta(np.beta, np.q, 1)?;
    Ok(params.increment * critical_buffer(theta))
}

/// Queue-draining branch of the averages, valid for `B ≤ m·b₀,₁`.
///
/// `S_CD` solves `e^(−S) + S − 1 = B/m` and `S_AB` makes the post-reduction
/// drain path reach the empty queue; all integrals are exact.
pub fn metrics_clipped(params: &FluidParams) -> Result<ParetoPoint> {
    hypothesis(params)?;
    let knee = knee_buffer(params)?;
    if params.buffer > knee {
        return Err(Error::WrongBranch {
            buffer: params.buffer,
            knee,
        });
    }
    let np = params.normalize()?;
    let (beta, q, b) = (np.beta, np.q, np.b);
    let (m, mu, t_prop) = (params.increment, params.capacity, params.delay);

    let s_cd = crate::classifier::refill_time(b)?;
    // drain path from the post-reduction state (y = b, v = β(q + S_CD + 1))
    let v_a = beta * (q + s_cd + 1.0);
    let drain = Segment::new(v_a, b, q);
    let s_ab = match drain.hit_level(0.0, crate::segment::Direction::Falling)? {
        Some(s) => s,
        // tangent at the knee: the minimum itself grazes zero
        None => {
            let (s0, y_min) = drain
                .interior_min()
                .expect("the drain path always dips below its start");
            debug_assert!(y_min.abs() < 1e-9, "no floor touch on the clipped branch");
            s0
        }
    };
    let refill = Segment::new(q, 0.0, q);

    let int_y = drain.int_y(s_ab) + refill.int_y(s_cd);
    let int_y_sq = drain.int_y_sq(s_ab) + refill.int_y_sq(s_cd);

    let s_cycle = (1.0 - beta) * (q + s_cd + 1.0);
    let t_cycle = (1.0 - beta) * (1.0 + q + s_cd) * t_prop + params.buffer / mu + m / mu * int_y;
    let lambda_bar = m * (1.0 - beta * beta) / (2.0 * t_cycle) * (1.0 + q + s_cd).powi(2);
    let g_bar = m / t_cycle
        * (0.5 * (q + s_cd).powi(2) - 0.5 * beta * beta * (1.0 + q + s_cd).powi(2) + q + b);
    let x_bar = (m * t_prop * int_y + m * m / mu * (int_y_sq + b * (q + b))) / t_cycle;

    Ok(ParetoPoint {
        buffer: params.buffer,
        lambda_bar,
        g_bar,
        x_bar,
        t_cycle,
        s_cycle,
        s_cd: Some(s_cd),
        s_ab: Some(s_ab),
        s1: None,
        regime: Regime::Clipped,
    })
}

/// Full-utilization branch of the averages, valid for `B > m·b₀,₁`.
pub fn metrics_unclipped(params: &FluidParams) -> Result<ParetoPoint> {
    hypothesis(params)?;
    let np = params.normalize()?;
    let (beta, q, b) = (np.beta, np.q, np.b);
    let (m, mu, t_prop) = (params.increment, params.capacity, params.delay);

    let s1 = unclipped_return_time(beta, np.a(), 1)?;
    let v0 = beta * (s1 + 1.0) / (1.0 - beta);
    let dip = Segment::new(v0, b, q);
    let int_y = dip.int_y(s1);
    let int_y_sq = dip.int_y_sq(s1);

    let t_cycle = t_prop * (s1 + 1.0) + m / mu * (int_y + b);
    let lambda_bar = m / (2.0 * t_cycle) * (1.0 + beta) / (1.0 - beta) * (s1 + 1.0).powi(2);
    let x_bar = (m * t_prop * int_y + m * m / mu * (int_y_sq + b * (q + b))) / t_cycle;

    Ok(ParetoPoint {
        buffer: params.buffer,
        lambda_bar,
        g_bar: mu,
        x_bar,
        t_cycle,
        s_cycle: s1 + 1.0,
        s_cd: None,
        s_ab: None,
        s1: Some(s1),
        regime: Regime::Unclipped,
    })
}

/// Averages at the branch matching the configured buffer.
pub fn metrics(params: &FluidParams) -> Result<ParetoPoint> {
    if params.buffer <= knee_buffer(params)? {
        metrics_clipped(params)
    } else {
        metrics_unclipped(params)
    }
}

/// Excess of the average sending rate over capacity, `Δ = λ̄ − μ`, on the
/// full-utilization branch; positive and decaying as the buffer grows.
pub fn excess_rate(params: &FluidParams) -> Result<f64> {
    Ok(metrics_unclipped(params)?.lambda_bar - params.capacity)
}

/// Evaluate the sweep over the given buffers and mark the knee.
pub fn pareto_sweep(params: &FluidParams, buffers: &[f64]) -> Result<ParetoSet> {
    if buffers.is_empty() {
        return Err(Error::InvalidParameter {
            name: "buffers",
            value: 0.0,
            requirement: "a non-empty buffer grid",
        });
    }
    let knee = knee_buffer(params)?;
    let points = buffers
        .iter()
        .map(|&b| {
            if b < 0.0 {
                return Err(Error::InvalidParameter {
                    name: "buffer",
                    value: b,
                    requirement: "a value >= 0",
                });
            }
            metrics(&params.with_buffer(b))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParetoSet {
        params: *params,
        knee_buffer: knee,
        knee: metrics_clipped(&params.with_buffer(knee))?,
        points,
    })
}

/// Solve one constrained sizing problem exactly.
///
/// Goodput rises with the buffer until the knee and sits at μ beyond it;
/// queue occupancy rises throughout. Both problems therefore reduce to a
/// bisection on a monotone branch.
pub fn solve_constraint(params: &FluidParams, constraint: Constraint) -> Result<ParetoPoint> {
    let knee = knee_buffer(params)?;
    let mu = params.capacity;
    match constraint {
        Constraint::MinGoodput(g_min) => {
            if g_min > mu {
                return Err(Error::Infeasible {
                    detail: format!("goodput floor {g_min} exceeds capacity {mu}"),
                });
            }
            let at_zero = metrics_clipped(&params.with_buffer(0.0))?;
            if g_min <= at_zero.g_bar {
                return Ok(at_zero);
            }
            if g_min >= mu {
                return metrics_clipped(&params.with_buffer(knee));
            }
            let g_of = |b: f64| match metrics_clipped(&params.with_buffer(b)) {
                Ok(p) => p.g_bar - g_min,
                Err(_) => f64::NAN,
            };
            let b = brent("goodput floor", g_of, 0.0, knee)?;
            metrics_clipped(&params.with_buffer(b))
        }
        Constraint::MaxQueue(x_max) => {
            if x_max < 0.0 {
                return Err(Error::Infeasible {
                    detail: format!("queue bound {x_max} is negative"),
                });
            }
            // largest buffer satisfying the bound (x̄ grows with B)
            let x_of = |b: f64| match metrics(&params.with_buffer(b)) {
                Ok(p) => p.x_bar - x_max,
                Err(_) => f64::NAN,
            };
            if x_of(knee) <= 0.0 {
                // the knee is feasible: goodput is already maximal there and
                // any larger buffer only adds delay
                return metrics_clipped(&params.with_buffer(knee));
            }
            if x_of(0.0) > 0.0 {
                return Err(Error::Infeasible {
                    detail: format!("queue bound {x_max} unreachable even with an empty buffer"),
                });
            }
            let b = brent("queue bound", x_of, 0.0, knee)?;
            metrics(&params.with_buffer(b))
        }
    }
}

/// Scan a sweep for the point maximizing `c1·ḡ − c2·x̄` (the weighted
/// scalarization of the frontier).
pub fn weighted_best(set: &ParetoSet, c1: f64, c2: f64) -> Option<&ParetoPoint> {
    set.points
        .iter()
        .max_by(|p, r| {
            let a = c1 * p.g_bar - c2 * p.x_bar;
            let b = c1 * r.g_bar - c2 * r.x_bar;
            a.partial_cmp(&b).expect("averages are finite")
        })
}

/// A geometric-ish buffer grid from `lo` to `hi` inclusive.
pub fn buffer_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 0 {
        return Vec::new();
    }
    if points == 1 || hi <= lo {
        return vec![lo];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Asymptotic excess-rate law on the full-utilization branch:
/// `Δ ≈ 3μ(1−β) / ((1+β)(s₁² + 2s₁))`, exact up to `O(e^(−s₁))` and an
/// `O(1)` denominator offset.
pub fn excess_rate_asymptote(mu: f64, beta: f64, s1: f64) -> f64 {
    3.0 * mu * (1.0 - beta) / ((1.0 + beta) * (s1 * s1 + 2.0 * s1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DataUnit;

    /// 10 Mbps bottleneck, 0.24 s delay, ten synchronized connections with
    /// 4000-bit packets.
    fn ns_params(buffer: f64) -> FluidParams {
        FluidParams::new(1e7, 0.24, 4e4, buffer, 0.5, DataUnit::Bits).unwrap()
    }

    #[test]
    fn knee_matches_critical_buffer() {
        let p = ns_params(0.0);
        let knee = knee_buffer(&p).unwrap();
        assert!((knee - 1999423.821834028).abs() < 1e-4);
    }

    #[test]
    fn clipped_point_frozen_values() {
        let p = ns_params(1e5);
        let pt = metrics_clipped(&p).unwrap();
        assert!((pt.lambda_bar - 8033174.8344723414).abs() < 1e-3);
        assert!((pt.g_bar - 8025604.1921836904).abs() < 1e-3);
        assert!((pt.x_bar - 7822.4389444897713).abs() < 1e-6);
        assert!((pt.t_cycle - 7.760752744514782).abs() < 1e-10);
        assert!(pt.g_bar < p.capacity);
    }

    #[test]
    fn zero_buffer_point() {
        let pt = metrics_clipped(&ns_params(0.0)).unwrap();
        assert_eq!(pt.s_cd, Some(0.0));
        assert!(pt.g_bar < 1e7);
        assert!(pt.x_bar.abs() < 1e-9);
    }

    #[test]
    fn unclipped_point_frozen_values() {
        let pt = metrics_unclipped(&ns_params(3e6)).unwrap();
        assert_eq!(pt.g_bar, 1e7);
        assert!((pt.lambda_bar - 10002131.628030909).abs() < 1e-3);
        assert!((pt.x_bar - 1848249.4004796163).abs() < 1e-3);
        assert!((pt.t_cycle - 28.1475).abs() < 1e-9);
        assert!((pt.s1.unwrap() - 67.5).abs() < 1e-9);
    }

    #[test]
    fn branches_agree_at_the_knee() {
        let p = ns_params(0.0);
        let knee = knee_buffer(&p).unwrap();
        let c = metrics_clipped(&p.with_buffer(knee)).unwrap();
        let u = metrics_unclipped(&p.with_buffer(knee)).unwrap();
        for (a, b) in [
            (c.lambda_bar, u.lambda_bar),
            (c.g_bar, u.g_bar),
            (c.x_bar, u.x_bar),
            (c.t_cycle, u.t_cycle),
        ] {
            assert!((a - b).abs() <= 1e-6 * b.abs(), "knee mismatch: {a} vs {b}");
        }
        assert!((c.g_bar - 1e7).abs() < 1e-6 * 1e7);
    }

    #[test]
    fn hypothesis_is_enforced() {
        // q = 0.9 < A*_2
        let p = FluidParams::new(0.9, 1.0, 1.0, 0.5, 0.5, DataUnit::Packets).unwrap();
        assert!(matches!(
            metrics(&p),
            Err(Error::OutsideSingleLossRegime { .. })
        ));
    }

    #[test]
    fn wrong_branch_is_rejected() {
        let p = ns_params(5e6);
        assert!(matches!(metrics_clipped(&p), Err(Error::WrongBranch { .. })));
    }

    #[test]
    fn excess_rate_positive_and_decaying() {
        let p = ns_params(0.0);
        let knee = knee_buffer(&p).unwrap();
        let mut prev = f64::INFINITY;
        for mult in [1.5, 2.0, 3.0, 5.0, 8.0, 13.0] {
            let d = excess_rate(&p.with_buffer(knee * mult)).unwrap();
            assert!(d > 0.0);
            assert!(d < prev);
            prev = d;
        }
        // the asymptotic law holds tightly once s1 is large
        let pt = metrics_unclipped(&p.with_buffer(3e6)).unwrap();
        let delta = pt.lambda_bar - 1e7;
        let law = excess_rate_asymptote(1e7, 0.5, pt.s1.unwrap());
        assert!((delta / law - 1.0).abs() < 1e-3, "delta {delta} vs law {law}");
    }

    #[test]
    fn sweep_and_knee_marking() {
        let p = ns_params(0.0);
        let grid = buffer_grid(0.0, 6e6, 25);
        let set = pareto_sweep(&p, &grid).unwrap();
        assert_eq!(set.points.len(), 25);
        // goodput non-decreasing to the knee, exactly μ above it
        for w in set.points.windows(2) {
            if w[1].buffer <= set.knee_buffer {
                assert!(w[1].g_bar >= w[0].g_bar - 1e-9);
            }
            assert!(w[1].x_bar > w[0].x_bar);
            assert!(w[1].g_bar <= 1e7 + 1e-6);
        }
        for pt in &set.points {
            if pt.buffer > set.knee_buffer {
                assert_eq!(pt.g_bar, 1e7);
            } else {
                assert!(pt.g_bar < 1e7);
            }
        }
        assert!((set.knee.g_bar - 1e7).abs() < 1e-5);
    }

    #[test]
    fn constraint_goodput_floor_at_capacity_returns_knee() {
        let p = ns_params(0.0);
        let pt = solve_constraint(&p, Constraint::MinGoodput(1e7)).unwrap();
        assert!((pt.buffer - knee_buffer(&p).unwrap()).abs() < 1e-6);
        assert!(solve_constraint(&p, Constraint::MinGoodput(1.1e7)).is_err());
    }

    #[test]
    fn constraint_goodput_interior() {
        let p = ns_params(0.0);
        let pt = solve_constraint(&p, Constraint::MinGoodput(0.95e7)).unwrap();
        assert!((pt.g_bar - 0.95e7).abs() < 1e-3 * 1e7);
        assert!(pt.buffer < knee_buffer(&p).unwrap());
    }

    #[test]
    fn constraint_queue_bound() {
        let p = ns_params(0.0);
        // zero queue bound forces the empty buffer
        let pt = solve_constraint(&p, Constraint::MaxQueue(0.0)).unwrap();
        assert!(pt.buffer.abs() < 1e-9);
        // a huge bound caps at the knee (goodput saturates there)
        let pt = solve_constraint(&p, Constraint::MaxQueue(1e12)).unwrap();
        assert!((pt.buffer - knee_buffer(&p).unwrap()).abs() < 1e-6);
        // interior bound binds exactly
        let pt = solve_constraint(&p, Constraint::MaxQueue(5e5)).unwrap();
        assert!((pt.x_bar - 5e5).abs() < 1.0);
        assert!(solve_constraint(&p, Constraint::MaxQueue(-1.0)).is_err());
    }

    #[test]
    fn weighted_scalarization_prefers_goodput_when_cheap() {
        let p = ns_params(0.0);
        let grid = buffer_grid(0.0, 4e6, 40);
        let set = pareto_sweep(&p, &grid).unwrap();
        let all_goodput = weighted_best(&set, 1.0, 0.0).unwrap();
        assert_eq!(all_goodput.g_bar, 1e7);
        let all_delay = weighted_best(&set, 0.0, 1.0).unwrap();
        assert_eq!(all_delay.buffer, 0.0);
    }

    #[test]
    fn dimensional_scaling_invariance() {
        // scaling (μ, m, B) by c scales λ̄, ḡ, x̄ by c and keeps T_cycle
        let p = ns_params(8e5);
        let a = metrics(&p).unwrap();
        let c = 3.7;
        let scaled = FluidParams::new(
            p.capacity * c,
            p.delay,
            p.increment * c,
            p.buffer * c,
            p.beta,
            p.unit,
        )
        .unwrap();
        let b = metrics(&scaled).unwrap();
        assert!((b.lambda_bar / a.lambda_bar - c).abs() < 1e-12 * c);
        assert!((b.g_bar / a.g_bar - c).abs() < 1e-12 * c);
        assert!((b.x_bar / a.x_bar - c).abs() < 1e-12 * c);
        assert!((b.t_cycle - a.t_cycle).abs() < 1e-12 * a.t_cycle);
        assert!((b.s_cycle - a.s_cycle).abs() < 1e-12 * a.s_cycle);
    }

    #[test]
    fn sixty_connection_sending_rate_non_monotone() {
        // with 60 connections the sending rate overshoots μ and decays while
        // goodput stays monotone up to μ
        let p = FluidParams::new(1e7, 0.24, 60.0 * 4000.0, 0.0, 0.5, DataUnit::Bits).unwrap();
        let knee = knee_buffer(&p).unwrap();
        let grid = buffer_grid(0.0, 8.0 * knee, 60);
        let set = pareto_sweep(&p, &grid).unwrap();
        let peak = set
            .points
            .iter()
            .map(|pt| pt.lambda_bar)
            .fold(f64::MIN, f64::max);
        assert!(peak > 1e7, "sending rate must overshoot capacity");
        let last = set.points.last().unwrap();
        assert!(last.lambda_bar < peak, "and decay afterwards");
        assert!(last.lambda_bar > 1e7);
    }
}
