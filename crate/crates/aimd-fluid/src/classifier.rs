//! Limit-cycle classification for a parameter triple `(β, q, b)`.
//!
//! The classifier answers, without simulating: which cycle orders are
//! realizable, what shape each takes (running along the empty queue,
//! grazing it, or staying clear), and whether the parameters guarantee that
//! every loss event costs exactly one window reduction.
//!
//! The taxonomy splits on how `q` compares against `q*_{N+1}` and `A*_{N+1}`:
//!
//! * `A*_{N+1} < q` — only orders ≤ N occur; the N-cycle lives on
//!   `[0, A*_N − q]` and lower orders take over as `b` grows.
//! * `q ≤ q*_{N+1}` — an (N+1)-cycle additionally appears for
//!   `b ∈ [b̲, A*_{N+1} − q]`, clipped below `b₀,N+1` and critical there.
//! * `q*_{N+1} < q ≤ A*_{N+1}` — the (N+1)-cycle can only be clipped and
//!   only while `b ∈ [b̲, b̄]` and `b ≤ A*_{N+1} − q`.

use serde::{Deserialize, Serialize};

use crate::constants::{CriticalConstants, DerivedConstants, ExtReal};
use crate::error::{Error, Result};
use crate::params::NormalizedParams;
use crate::roots::{brent, grow_upper, one_minus_exp_neg};

/// Equality band for deciding that a buffer sits exactly on a regime
/// boundary (e.g. the critical buffer `b₀,k`).
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Shape of a limit cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CycleShape {
    /// The queue stays empty for a positive time interval.
    Clipped,
    /// The queue touches empty at exactly one point.
    Critical,
    /// The queue never empties.
    Unclipped,
}

/// One limit cycle: order, shape and anchor values.
///
/// `v0` is the post-jump window, `s1` the time to refill the buffer, `s0`
/// the time of the interior queue minimum (absent for clipped cycles) and
/// `s_cycle = s1 + 1` the full period in RTTs including the overflow RTT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleDescriptor {
    pub order: u32,
    pub shape: CycleShape,
    pub v0: f64,
    pub s1: f64,
    pub s0: Option<f64>,
    pub y_min: f64,
    pub s_cycle: f64,
}

/// Which branch of the taxonomy applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    #[serde(rename = "A_star_lt_q")]
    AStarBelowQ,
    #[serde(rename = "q_le_qstar")]
    QWithinCritical,
    #[serde(rename = "qstar_lt_q_le_Astar")]
    QBetweenCriticalAndExistence,
}

/// The six mutually exclusive parameter regions in which exactly one
/// order-1 cycle exists (single loss per congestion event).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingleJumpCondition {
    /// `β/(1−β) ≥ q` and `b + q > A*₂`.
    #[serde(rename = "a")]
    A,
    /// `A*₂ < q`; any buffer.
    #[serde(rename = "b")]
    B,
    /// `β/(1−β) < q ≤ q*₂` and `b ∉ [b̲, A*₂ − q]`.
    #[serde(rename = "c")]
    C,
    /// `max(β/(1−β), q*₂) < q ≤ A*₂ − C`, `q ≤ D`, and `b ∉ [b̲, b̄]`.
    #[serde(rename = "d")]
    D,
    /// `max(β/(1−β), q*₂) < q ≤ A*₂ − C` and `q > D`; any buffer.
    #[serde(rename = "e")]
    E,
    /// `max(β/(1−β), q*₂, A*₂ − C) < q ≤ A*₂`; any buffer.
    #[serde(rename = "f")]
    F,
}

/// Full classification of `(β, q, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub params: NormalizedParams,
    pub constants: DerivedConstants,
    pub case_tag: CaseTag,
    /// Realizable limit cycles, ascending by order (one or two entries,
    /// consecutive orders when two).
    pub cycles: Vec<CycleDescriptor>,
    /// True exactly when `cycles` is a single order-1 cycle.
    pub single_jump_only: bool,
    /// Which single-jump region applied, when one does.
    pub single_jump_condition: Option<SingleJumpCondition>,
    pub warnings: Vec<String>,
}

/// Solve the closure equation of an unclipped order-`k` cycle:
/// `(1 + A − β^k(s+1)/(1−β^k))·(1 − e^(−s)) = s` for its positive root.
pub(crate) fn unclipped_return_time(beta: f64, a: f64, k: u32) -> Result<f64> {
    let bk = beta.powi(k as i32);
    let ratio = bk / (1.0 - bk);
    // positivity of the root needs β^k(1+A) < A
    if bk * (1.0 + a) >= a {
        return Err(Error::InvalidParameter {
            name: "a",
            value: a,
            requirement: "beta^k (1 + a) < a for an order-k cycle",
        });
    }
    let f = |s: f64| (1.0 + a - ratio * (s + 1.0)) * one_minus_exp_neg(s) - s;
    let (lo, hi) = grow_upper("unclipped cycle closure", &f, 1e-12, 1.0, true)?;
    brent("unclipped cycle closure", f, lo, hi)
}

/// Descriptor of the unclipped (or critical) order-`k` cycle at `(β, q, b)`.
pub(crate) fn unclipped_cycle(np: &NormalizedParams, k: u32) -> Result<CycleDescriptor> {
    let s1 = unclipped_return_time(np.beta, np.a(), k)?;
    let bk = np.beta.powi(k as i32);
    let v0 = bk * (s1 + 1.0) / (1.0 - bk);
    let s0 = (s1 / one_minus_exp_neg(s1)).ln();
    let y_min = v0 + s0 - np.q;
    Ok(CycleDescriptor {
        order: k,
        shape: if y_min.abs() <= BOUNDARY_TOL {
            CycleShape::Critical
        } else {
            CycleShape::Unclipped
        },
        v0,
        s1,
        s0: Some(s0),
        y_min: y_min.max(0.0),
        s_cycle: s1 + 1.0,
    })
}

/// Descriptor of the clipped order-`k` cycle: the loop through
/// `(y = 0, v = q)` whose refill time `r` solves `e^(−r) + r − 1 = b`.
pub(crate) fn clipped_cycle(np: &NormalizedParams, k: u32) -> Result<CycleDescriptor> {
    let r = refill_time(np.b)?;
    let bk = np.beta.powi(k as i32);
    let v_pre = np.q + r + 1.0;
    let v0 = bk * v_pre;
    let s_cycle = v_pre - v0; // the window climbs back by exactly the cut
    Ok(CycleDescriptor {
        order: k,
        shape: CycleShape::Clipped,
        v0,
        s1: s_cycle - 1.0,
        s0: None,
        y_min: 0.0,
        s_cycle,
    })
}

/// Time for the queue to grow from empty (at `v = q`) to `b`.
pub(crate) fn refill_time(b: f64) -> Result<f64> {
    if b == 0.0 {
        return Ok(0.0);
    }
    brent(
        "refill time",
        |r| r - one_minus_exp_neg(r) - b,
        1e-300,
        b + 1.0,
    )
}

/// The exact taxonomy of realizable cycles at `(β, q, b)`.
pub fn classify(beta: f64, q: f64, b: f64) -> Result<ClassificationReport> {
    let np = NormalizedParams::new(beta, q, b)?;
    let constants = DerivedConstants::compute(beta, q)?;
    classify_with(&np, constants)
}

pub(crate) fn classify_with(
    np: &NormalizedParams,
    constants: DerivedConstants,
) -> Result<ClassificationReport> {
    let (beta, q, b) = (np.beta, np.q, np.b);
    let n = constants.n_min;
    let mut warnings = Vec::new();
    let mut cycles: Vec<CycleDescriptor> = Vec::new();

    // Orders below N exist on (β^k/(1−β^k) − q, A*_k − q] and never clip.
    // The lower end is tested through the same expression that gates the
    // closure equation, so membership always implies solvability.
    let a = q + b;
    for k in 1..n {
        let above_lower = beta.powi(k as i32) * (1.0 + a) < a;
        let upper_ok = match constants.a_star(k) {
            ExtReal::Finite(a_k) => b <= a_k - q,
            ExtReal::Infinite => true,
        };
        if above_lower && upper_ok {
            cycles.push(unclipped_cycle(np, k)?);
        }
    }

    // Order N exists on [0, A*_N − q]; clipped below b₀,N, critical there.
    let b0_n = constants
        .critical_for(n)
        .expect("critical constants for order N are always computed");
    let n_upper_ok = match constants.a_star(n) {
        ExtReal::Finite(a_n) => b <= a_n - q,
        ExtReal::Infinite => true,
    };
    if n_upper_ok {
        cycles.push(shaped_cycle(np, n, b0_n)?);
    }

    // Order N+1 splits into the three regimes.
    let a_star_n1 = constants.a_star(n + 1);
    let q_star_n1 = constants
        .order(n + 1)
        .expect("order N+1 constants are always computed")
        .q_star;
    let case_tag = if a_star_n1.lt(q) {
        CaseTag::AStarBelowQ
    } else if q_star_n1.ge(q) {
        CaseTag::QWithinCritical
    } else {
        CaseTag::QBetweenCriticalAndExistence
    };
    match case_tag {
        CaseTag::AStarBelowQ => {}
        CaseTag::QWithinCritical => {
            let window = constants
                .coexistence
                .as_ref()
                .expect("q <= q*_{N+1} implies q <= D, so the window exists");
            let a_n1 = a_star_n1
                .finite()
                .expect("A*_{N+1} is finite for orders >= 2");
            if b >= window.b_lo && b <= a_n1 - q {
                let b0_n1 = constants
                    .critical_for(n + 1)
                    .expect("critical constants for order N+1 are always computed");
                cycles.push(shaped_cycle(np, n + 1, b0_n1)?);
            }
        }
        CaseTag::QBetweenCriticalAndExistence => {
            let a_n1 = a_star_n1
                .finite()
                .expect("A*_{N+1} is finite for orders >= 2");
            // the tangency buffer never equals A*_{N+1} − q in this regime
            debug_assert!(constants.d < q || constants.c != a_n1 - q);
            if constants.d >= q && constants.c <= a_n1 - q {
                let window = constants
                    .coexistence
                    .as_ref()
                    .expect("q <= D implies the window exists");
                if window.b_hi > a_n1 - q && window.b_lo < a_n1 - q {
                    warnings.push(format!(
                        "order-{} window [{}, {}] truncated at A*-q = {}",
                        n + 1,
                        window.b_lo,
                        window.b_hi,
                        a_n1 - q,
                    ));
                }
                if b >= window.b_lo && b <= window.b_hi && b <= a_n1 - q {
                    cycles.push(clipped_cycle(np, n + 1)?);
                }
            }
        }
    }

    cycles.sort_by_key(|c| c.order);
    let (single, condition) = single_jump_predicate_with(np, &constants)?;
    debug_assert_eq!(
        single,
        cycles.len() == 1 && cycles[0].order == 1,
        "single-jump conditions disagree with the cycle table at ({beta}, {q}, {b})"
    );

    Ok(ClassificationReport {
        params: *np,
        constants,
        case_tag,
        cycles,
        single_jump_only: single,
        single_jump_condition: condition,
        warnings,
    })
}

/// Descriptor for an order whose shape depends on `b` against `b₀,k`.
fn shaped_cycle(
    np: &NormalizedParams,
    k: u32,
    crit: &CriticalConstants,
) -> Result<CycleDescriptor> {
    if (np.b - crit.b0).abs() <= BOUNDARY_TOL {
        let bk = np.beta.powi(k as i32);
        let v0 = bk * (crit.theta + 1.0) / (1.0 - bk);
        Ok(CycleDescriptor {
            order: k,
            shape: CycleShape::Critical,
            v0,
            s1: crit.theta,
            s0: Some((crit.theta / one_minus_exp_neg(crit.theta)).ln()),
            y_min: 0.0,
            s_cycle: crit.theta + 1.0,
        })
    } else if np.b < crit.b0 {
        clipped_cycle(np, k)
    } else {
        unclipped_cycle(np, k)
    }
}

/// Whether only a single order-1 cycle exists, and the region certifying it.
pub fn single_jump_predicate(
    beta: f64,
    q: f64,
    b: f64,
) -> Result<(bool, Option<SingleJumpCondition>)> {
    let np = NormalizedParams::new(beta, q, b)?;
    let constants = DerivedConstants::compute(beta, q)?;
    single_jump_predicate_with(&np, &constants)
}

fn single_jump_predicate_with(
    np: &NormalizedParams,
    constants: &DerivedConstants,
) -> Result<(bool, Option<SingleJumpCondition>)> {
    let (beta, q, b) = (np.beta, np.q, np.b);
    let ratio1 = beta / (1.0 - beta);
    let a2 = crate::constants::a_star(beta, 2)?
        .finite()
        .expect("A*_2 is finite");
    let q2 = crate::constants::q_star(beta, 2)?
        .finite()
        .expect("q*_2 is finite");
    // D, C and the window with the minimal order forced to 1; meaningful in
    // the regions below, which all imply N = 1.
    let (d1, c1) = crate::constants::shape_thresholds(beta, 1);

    let mut hits = Vec::new();
    if ratio1 >= q && b + q > a2 {
        hits.push(SingleJumpCondition::A);
    }
    if a2 < q {
        hits.push(SingleJumpCondition::B);
    }
    if ratio1 < q && q <= q2 {
        let w = coexistence_window_order1(beta, q, constants)?;
        if !(b >= w.0 && b <= a2 - q) {
            hits.push(SingleJumpCondition::C);
        }
    }
    let lower_de = ratio1.max(q2);
    if lower_de < q && q <= a2 - c1 {
        if q <= d1 {
            let w = coexistence_window_order1(beta, q, constants)?;
            if !(b >= w.0 && b <= w.1) {
                hits.push(SingleJumpCondition::D);
            }
        } else {
            hits.push(SingleJumpCondition::E);
        }
    }
    if lower_de.max(a2 - c1) < q && q <= a2 {
        hits.push(SingleJumpCondition::F);
    }

    debug_assert!(hits.len() <= 1, "single-jump regions overlap: {hits:?}");
    Ok((!hits.is_empty(), hits.first().copied()))
}

/// The window roots with N = 1 (which all single-jump regions imply).
fn coexistence_window_order1(
    beta: f64,
    q: f64,
    constants: &DerivedConstants,
) -> Result<(f64, f64)> {
    let w = if constants.n_min == 1 {
        constants.coexistence
    } else {
        crate::constants::solve_r_roots(beta, q, 1)?
    };
    let w = w.expect("the single-jump regions using the window imply q <= D");
    Ok((w.b_lo, w.b_hi))
}

/// Tightness of the single-loss sufficient condition `b + q > A*₂` against
/// the classical bound `b + q > 2β/(1−β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficientConditionGap {
    pub a_star_2: f64,
    /// The classical threshold `2β/(1−β)`.
    pub legacy: f64,
    /// `legacy − A*₂`; positive everywhere and divergent as β → 1.
    pub delta: f64,
}

pub fn sufficient_condition_gap(beta: f64) -> Result<SufficientConditionGap> {
    let a_star_2 = crate::constants::a_star(beta, 2)?
        .finite()
        .expect("A*_2 is finite");
    let legacy = 2.0 * beta / (1.0 - beta);
    Ok(SufficientConditionGap {
        a_star_2,
        legacy,
        delta: legacy - a_star_2,
    })
}
