//! Derived constants of the cycle analysis.
//!
//! For fixed `(β, q)` these constants fully determine which limit cycles can
//! exist as the buffer `b` varies: the minimal order `N`, the thresholds
//! `D` and `C`, the critical-buffer values `b₀ₖ`, the order-existence
//! thresholds `A*ₖ` and criticality bounds `q*ₖ`, and the coexistence window
//! `[b̲, b̄]` cut out by the roots of
//! `e^(−r) + r − 1 = β^N(q + r + 1) − q`.
//!
//! `τ₁`, `A*₁` and `q*₁` are unbounded by convention, as is the order-0
//! threshold `β⁰/(1−β⁰)`; [`ExtReal`] carries that convention explicitly so
//! the classifier never branches on a sentinel float.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{brent, grow_upper, one_minus_exp_neg};

/// A non-negative quantity that may be unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::Infinite)
    }

    /// `self < x`; an unbounded value is never below a float.
    pub fn lt(self, x: f64) -> bool {
        match self {
            ExtReal::Finite(v) => v < x,
            ExtReal::Infinite => false,
        }
    }

    /// `self >= x`; an unbounded value always dominates.
    pub fn ge(self, x: f64) -> bool {
        !self.lt(x)
    }

    /// `x <= self`.
    pub fn admits(self, x: f64) -> bool {
        match self {
            ExtReal::Finite(v) => x <= v,
            ExtReal::Infinite => true,
        }
    }
}

impl std::fmt::Display for ExtReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => serializer.serialize_f64(*v),
            ExtReal::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ExtReal;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                write!(f, "a number or the string \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal::Finite(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtReal, E> {
                if v == "inf" {
                    Ok(ExtReal::Infinite)
                } else {
                    Err(E::custom("expected \"inf\""))
                }
            }
        }
        deserializer.deserialize_any(V)
    }
}

/// `β^k/(1−β^k)` as an extended value; `k = 0` is unbounded by convention.
pub fn order_threshold(beta: f64, k: u32) -> ExtReal {
    if k == 0 {
        ExtReal::Infinite
    } else {
        let bk = beta.powi(k as i32);
        ExtReal::Finite(bk / (1.0 - bk))
    }
}

/// Minimal limit-cycle order `N = min{ i ≥ 1 : β^i/(1−β^i) < q }`.
pub fn min_order(beta: f64, q: f64) -> Result<u32> {
    check(beta, q)?;
    let mut bk = beta;
    for i in 1..=MAX_ORDER {
        if bk / (1.0 - bk) < q {
            return Ok(i);
        }
        bk *= beta;
    }
    Err(Error::IterationLimit {
        context: "min_order",
        last: MAX_ORDER as f64,
    })
}

const MAX_ORDER: u32 = 10_000;

/// The thresholds `D = ln(1−β^N) + 2β^N/(1−β^N)` and
/// `C = −ln(1−β^N) − β^N` for the given order.
pub fn shape_thresholds(beta: f64, n: u32) -> (f64, f64) {
    let bn = beta.powi(n as i32);
    let d = (1.0 - bn).ln() + 2.0 * bn / (1.0 - bn);
    let c = -(1.0 - bn).ln() - bn;
    (d, c)
}

/// The positive solution `θₖ` of
/// `ln(θ/(1−e^(−θ))) + β^k·θ/(1−β^k) = q − β^k/(1−β^k)`,
/// which pins down the critical cycle of order `k`.
///
/// Requires `q > β^k/(1−β^k)`; below that threshold no critical `k`-cycle
/// exists for any buffer.
pub fn solve_theta(beta: f64, q: f64, k: u32) -> Result<f64> {
    check(beta, q)?;
    let bk = beta.powi(k as i32);
    let ratio = bk / (1.0 - bk);
    let rhs = q - ratio;
    if rhs <= 0.0 {
        return Err(Error::NoCriticalCycle {
            order: k,
            q,
            threshold: ratio,
        });
    }
    // The left side grows from 0 to infinity, so the root is unique.
    let f = |th: f64| (th / one_minus_exp_neg(th)).ln() + ratio * th - rhs;
    let (lo, hi) = grow_upper("solve_theta", &f, 1e-300, 1.0, false)?;
    brent("solve_theta", f, lo, hi)
}

/// Critical buffer `b₀ = γ − ln γ − 1` with `γ = θ/(1−e^(−θ))`.
///
/// Positive for every `θ > 0` since `γ > 1`.
pub fn critical_buffer(theta: f64) -> f64 {
    let gamma = theta / one_minus_exp_neg(theta);
    gamma - gamma.ln() - 1.0
}

/// The positive solution `τₖ` of `τ/(1 + α(τ+1)) = 1 − e^(−τ)` with
/// `α = (β^(k−1) − β^k)/(1−β^k)`; unbounded for `k = 1` by convention.
pub fn solve_tau(beta: f64, k: u32) -> Result<ExtReal> {
    check(beta, 1.0)?;
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            value: 0.0,
            requirement: "an order >= 1",
        });
    }
    if k == 1 {
        return Ok(ExtReal::Infinite);
    }
    let bk = beta.powi(k as i32);
    let alpha = (beta.powi(k as i32 - 1) - bk) / (1.0 - bk);
    debug_assert!(alpha < 0.5); // guarantees a unique positive root
    let f = |t: f64| (1.0 + alpha * (t + 1.0)) * one_minus_exp_neg(t) - t;
    // f starts positive (slope α at 0) and tends to -infinity.
    let (lo, hi) = grow_upper("solve_tau", &f, 1e-12, 1.0, true)?;
    Ok(ExtReal::Finite(brent("solve_tau", f, lo, hi)?))
}

/// Existence threshold `A*ₖ = β^(k−1)(τₖ+1)/(1−β^k)` for unclipped cycles of
/// order `k`: such a cycle exists exactly when `b + q` lies in
/// `(β^k/(1−β^k), A*ₖ]`. `A*₁` is unbounded.
pub fn a_star(beta: f64, k: u32) -> Result<ExtReal> {
    match solve_tau(beta, k)? {
        ExtReal::Infinite => Ok(ExtReal::Infinite),
        ExtReal::Finite(tau) => {
            let bk = beta.powi(k as i32);
            Ok(ExtReal::Finite(
                beta.powi(k as i32 - 1) * (tau + 1.0) / (1.0 - bk),
            ))
        }
    }
}

/// Criticality bound `q*ₖ = β^k(τₖ+1)/(1−β^k) + ln(τₖ/(1−e^(−τₖ)))`: a
/// critical `k`-cycle exists for some buffer iff
/// `β^k/(1−β^k) < q ≤ q*ₖ`. `q*₁` is unbounded.
pub fn q_star(beta: f64, k: u32) -> Result<ExtReal> {
    match solve_tau(beta, k)? {
        ExtReal::Infinite => Ok(ExtReal::Infinite),
        ExtReal::Finite(tau) => {
            let bk = beta.powi(k as i32);
            Ok(ExtReal::Finite(
                bk * (tau + 1.0) / (1.0 - bk) + (tau / one_minus_exp_neg(tau)).ln(),
            ))
        }
    }
}

/// Roots of the coexistence equation and the buffer window they map to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoexistenceWindow {
    pub r_lo: f64,
    pub r_hi: f64,
    /// `b̲ = e^(−r̲) + r̲ − 1`
    pub b_lo: f64,
    /// `b̄ = e^(−r̄) + r̄ − 1`
    pub b_hi: f64,
}

/// The up-to-two positive roots `r̲ ≤ r̄` of
/// `e^(−r) + r − 1 = β^N(q + r + 1) − q`, or `None` when `q > D` and the
/// difference never reaches zero.
///
/// Within `|minimum| ≤ 1e-12` of tangency (`q = D`) a double root at
/// `r = −ln(1−β^N)` is reported, so the classifier stays continuous in `q`.
pub fn solve_r_roots(beta: f64, q: f64, n: u32) -> Result<Option<CoexistenceWindow>> {
    check(beta, q)?;
    let bn = beta.powi(n as i32);
    // excess of the refill path over the reduction threshold
    let gap = |r: f64| r - one_minus_exp_neg(r) + q - bn * (q + r + 1.0);
    let r_min = -(1.0 - bn).ln();
    let gap_min = gap(r_min);
    const TANGENT_TOL: f64 = 1e-12;
    if gap_min > TANGENT_TOL {
        return Ok(None);
    }
    let buffer_of = |r: f64| r - one_minus_exp_neg(r);
    if gap_min.abs() <= TANGENT_TOL {
        let b = buffer_of(r_min);
        return Ok(Some(CoexistenceWindow {
            r_lo: r_min,
            r_hi: r_min,
            b_lo: b,
            b_hi: b,
        }));
    }
    // gap(0) = q - β^N(q+1) > 0 by the definition of N; the minimum is
    // negative, so one root sits on each side of r_min.
    let r_lo = brent("solve_r_roots lower", &gap, 1e-300, r_min)?;
    let (lo, hi) = grow_upper("solve_r_roots upper", &gap, r_min, 2.0 * r_min.max(0.5), false)?;
    let r_hi = brent("solve_r_roots upper", &gap, lo, hi)?;
    Ok(Some(CoexistenceWindow {
        r_lo,
        r_hi,
        b_lo: buffer_of(r_lo),
        b_hi: buffer_of(r_hi),
    }))
}

/// Existence and criticality constants for one cycle order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderConstants {
    pub order: u32,
    pub tau: ExtReal,
    pub a_star: ExtReal,
    pub q_star: ExtReal,
}

/// Critical-cycle constants for one order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalConstants {
    pub order: u32,
    pub theta: f64,
    /// Buffer at which the cycle of this order is critical (touches the
    /// empty queue at a single point); also the full-utilization threshold.
    pub b0: f64,
}

/// Everything the classifier needs about `(β, q)`, independent of `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub beta: f64,
    pub q: f64,
    /// Minimal cycle order N.
    pub n_min: u32,
    /// Coexistence-root threshold: the window below exists iff `q ≤ D`.
    pub d: f64,
    /// Buffer value at the tangency of the coexistence equation.
    pub c: f64,
    /// Per-order constants for k = 1..=N+1.
    pub orders: Vec<OrderConstants>,
    /// Critical-cycle constants for k = N and N+1.
    pub critical: Vec<CriticalConstants>,
    /// Buffer window `[b̲, b̄]` of the order-(N+1) coexistence, when `q ≤ D`.
    pub coexistence: Option<CoexistenceWindow>,
}

impl DerivedConstants {
    pub fn compute(beta: f64, q: f64) -> Result<Self> {
        let n = min_order(beta, q)?;
        let (d, c) = shape_thresholds(beta, n);
        let mut orders = Vec::with_capacity(n as usize + 1);
        for k in 1..=n + 1 {
            orders.push(OrderConstants {
                order: k,
                tau: solve_tau(beta, k)?,
                a_star: a_star(beta, k)?,
                q_star: q_star(beta, k)?,
            });
        }
        let mut critical = Vec::with_capacity(2);
        for k in [n, n + 1] {
            let theta = solve_theta(beta, q, k)?;
            critical.push(CriticalConstants {
                order: k,
                theta,
                b0: critical_buffer(theta),
            });
        }
        let coexistence = solve_r_roots(beta, q, n)?;
        Ok(DerivedConstants {
            beta,
            q,
            n_min: n,
            d,
            c,
            orders,
            critical,
            coexistence,
        })
    }

    pub fn order(&self, k: u32) -> Option<&OrderConstants> {
        self.orders.iter().find(|o| o.order == k)
    }

    pub fn a_star(&self, k: u32) -> ExtReal {
        self.order(k).map(|o| o.a_star).unwrap_or(ExtReal::Infinite)
    }

    pub fn critical_for(&self, k: u32) -> Option<&CriticalConstants> {
        self.critical.iter().find(|c| c.order == k)
    }
}

fn check(beta: f64, q: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            requirement: "a value in (0, 1)",
        });
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidParameter {
            name: "q",
            value: q,
            requirement: "a finite value > 0",
        });
    }
    Ok(())
}
