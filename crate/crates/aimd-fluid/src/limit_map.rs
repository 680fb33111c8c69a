//! Return maps between consecutive reductions and their fixed points.
//!
//! From a full buffer at post-jump window `v₀`, the trajectory returns to the
//! buffer ceiling after `s*` RTTs, overflows for one more RTT, and is cut by
//! `β^k`. With the floor ignored this is the family of maps
//! `Φᵏ(v₀) = β^k·(v₀ + s* + 1)`, each a contraction with rate below `β^k`.
//! The realized map `φ` picks the multiplicity on its own and routes the
//! trajectory along the empty-queue floor when the dip reaches it.
//!
//! Iterating `φ` always settles; when two limits coexist, the boundary
//! between their basins (in the floor-free map) is the solution `d` of
//! `Φᴷ(d) = A`.

use crate::error::{Error, Result};
use crate::params::NormalizedParams;
use crate::roots::brent;
use crate::segment::{jump, Direction, Segment};

/// Iterate gap below which the fixed-point iteration is declared settled.
pub const LIMIT_TOL: f64 = 1e-12;
/// Iteration cap for [`limit_value`].
pub const LIMIT_MAX_ITER: u64 = 10_000;
/// Consecutive iterations with the same multiplicity required on top of the
/// gap criterion.
const STABLE_K_RUNS: u32 = 3;

/// Precomputed map data for one parameter triple.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMapContext {
    pub params: NormalizedParams,
    /// Minimal multiplicity K = min{ i ≥ 1 : β^i < A/(1+A) } that can pull
    /// the window below the threshold right after an overflow.
    pub k_min: u32,
    /// Basin boundary `d` solving `Φᴷ(d) = A`, when it lies in `[βA, A)`.
    pub basin_boundary: Option<f64>,
    /// Fixed point of `Φ^(K+1)` on `[βA, d]`, when the boundary exists.
    pub v1: Option<f64>,
    /// Fixed point of `Φᴷ`; always present on `[max(βA, d), A)`.
    pub v2: Option<f64>,
}

/// One application of the realized return map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarphiStep {
    /// Post-jump window after the step.
    pub v1: f64,
    /// Multiplicity used by the jump.
    pub k_used: u32,
    /// Whether the trajectory ran along the empty queue.
    pub clipped: bool,
}

impl ReturnMapContext {
    pub fn new(params: NormalizedParams) -> Result<Self> {
        let a = params.a();
        let beta = params.beta;
        let k_min = min_multiplicity(beta, a)?;
        let mut ctx = ReturnMapContext {
            params,
            k_min,
            basin_boundary: None,
            v1: None,
            v2: None,
        };

        // d solves Φᴷ(d) = A. Φᴷ is decreasing with Φᴷ(A) < A, so d lies in
        // [βA, A) exactly when Φᴷ(βA) ≥ A; otherwise d < βA and the map has
        // a single basin.
        let lo = beta * a;
        if phi_k(lo, k_min, &ctx)? >= a {
            let f = |v: f64| match phi_k(v, k_min, &ctx) {
                Ok(p) => p - a,
                Err(_) => f64::NAN,
            };
            let d = brent("basin boundary", f, lo, a)?;
            ctx.basin_boundary = Some(d);
        }

        // Fixed points: Φᵏ(v) − v is strictly decreasing, hence single-rooted.
        let fixed_point = |ctx: &ReturnMapContext, k: u32, lo: f64, hi: f64| -> Result<f64> {
            let g = |v: f64| match phi_k(v, k, ctx) {
                Ok(p) => p - v,
                Err(_) => f64::NAN,
            };
            brent("return-map fixed point", g, lo, hi)
        };
        match ctx.basin_boundary {
            Some(d) => {
                ctx.v1 = Some(fixed_point(&ctx, k_min + 1, lo, d)?);
                ctx.v2 = Some(fixed_point(&ctx, k_min, d, a)?);
            }
            None => {
                ctx.v2 = Some(fixed_point(&ctx, k_min, lo, a)?);
            }
        }
        Ok(ctx)
    }

    /// Basin boundary `d`, when two basins exist.
    pub fn basin_boundary(&self) -> Option<f64> {
        self.basin_boundary
    }
}

fn min_multiplicity(beta: f64, a: f64) -> Result<u32> {
    let target = a / (1.0 + a);
    let mut bk = beta;
    for i in 1..=100_000u32 {
        if bk < target {
            return Ok(i);
        }
        bk *= beta;
    }
    Err(Error::IterationLimit {
        context: "min_multiplicity",
        last: f64::from(100_000),
    })
}

/// Floor-free return map `Φᵏ(v₀) = β^k·(v₀ + s* + 1)` where `s*` is the time
/// to refill the buffer from `(y = b, v₀)`; `s* = 0` at `v₀ = A`.
pub fn phi_k(v0: f64, k: u32, ctx: &ReturnMapContext) -> Result<f64> {
    let p = &ctx.params;
    let a = p.a();
    let s_star = if v0 >= a {
        0.0
    } else {
        Segment::new(v0, p.b, p.q)
            .hit_level(p.b, Direction::Rising)?
            .expect("the scaled window grows unboundedly, so the buffer refills")
    };
    Ok(p.beta.powi(k as i32) * (v0 + s_star + 1.0))
}

/// The realized map: evolve from `(y = b, v₀)` through a possible run along
/// the empty queue, back to the full buffer, one RTT of overflow, then the
/// multiplicative cut with self-selected multiplicity.
pub fn varphi(v0: f64, ctx: &ReturnMapContext) -> Result<VarphiStep> {
    let p = &ctx.params;
    let a = p.a();
    let (s_star, clipped) = if v0 >= a {
        (0.0, false)
    } else if p.b == 0.0 {
        // empty-buffer system: the queue is pinned at zero and overflow
        // starts as soon as the window fills the pipe
        ((p.q - v0).max(0.0), true)
    } else {
        let seg = Segment::new(v0, p.b, p.q);
        let floor_touch = match seg.interior_min() {
            Some((_, y_min)) if y_min < 0.0 => seg.hit_level(0.0, Direction::Falling)?,
            _ => None,
        };
        match floor_touch {
            Some(s_fall) => {
                let slide = p.q - seg.v(s_fall);
                let refill = Segment::new(p.q, 0.0, p.q)
                    .hit_level(p.b, Direction::Rising)?
                    .expect("refill from the empty pipe always reaches the buffer");
                (s_fall + slide + refill, true)
            }
            None => (
                seg.hit_level(p.b, Direction::Rising)?
                    .expect("the scaled window grows unboundedly, so the buffer refills"),
                false,
            ),
        }
    };
    let jumped = jump(v0 + s_star + 1.0, a, p.beta)?;
    Ok(VarphiStep {
        v1: jumped.v_after,
        k_used: jumped.multiplicity,
        clipped,
    })
}

/// Outcome of iterating the realized map to its limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitOutcome {
    /// The settled post-jump window.
    pub v_limit: f64,
    /// The settled multiplicity, i.e. the order of the limit cycle.
    pub order: u32,
}

/// Iterate `φ` from `v₀` until consecutive iterates agree to [`LIMIT_TOL`]
/// and the multiplicity has stabilized.
///
/// Initial windows at or above the threshold are first mapped into
/// `[βA, A)` by the immediate overflow jump they would trigger.
pub fn limit_value(v0: f64, ctx: &ReturnMapContext) -> Result<LimitOutcome> {
    let p = &ctx.params;
    let a = p.a();
    let mut v = if v0 >= a {
        jump(v0 + 1.0, a, p.beta)?.v_after
    } else {
        v0
    };
    let mut prev_k = 0u32;
    let mut stable = 0u32;
    for _ in 0..LIMIT_MAX_ITER {
        let step = varphi(v, ctx)?;
        let settled = (step.v1 - v).abs() < LIMIT_TOL;
        if step.k_used == prev_k {
            stable += 1;
        } else {
            stable = 1;
            prev_k = step.k_used;
        }
        v = step.v1;
        if settled && stable >= STABLE_K_RUNS {
            return Ok(LimitOutcome {
                v_limit: v,
                order: step.k_used,
            });
        }
    }
    Err(Error::NoConvergence {
        context: "limit_value",
        iterations: LIMIT_MAX_ITER,
        last: v,
    })
}
