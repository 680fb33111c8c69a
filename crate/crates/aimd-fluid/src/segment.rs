//! Exact between-jump trajectory pieces.
//!
//! Between reductions the scaled system obeys `dv/ds = 1` and
//! `dy/ds = v − y − q` (away from the queue boundaries), which integrates in
//! closed form to
//!
//! ```text
//! v(s) = v0 + s
//! y(s) = (1 + q + y0 − v0)·e^(−s) + s − 1 + v0 − q
//! ```
//!
//! Everything in this crate — hitting times, cycle closure, time averages —
//! is built from this solution and its exact antiderivatives. There is no
//! numerical integration anywhere.

use crate::error::{Error, Result};
use crate::params::{JumpResult, State};
use crate::roots::{brent, grow_upper, one_minus_exp_neg};

/// Crossing direction for [`Segment::hit_level`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
}

/// One smooth trajectory piece starting from `(v0, y0)` at local time 0.
///
/// The exponential coefficient `c = 1 + q + y0 − v0` determines the shape:
/// for `c > 1` the queue dips to an interior minimum at `s = ln c` before
/// rising, otherwise it rises monotonically.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub v0: f64,
    pub y0: f64,
    pub q: f64,
    c: f64,
}

impl Segment {
    pub fn new(v0: f64, y0: f64, q: f64) -> Self {
        Segment {
            v0,
            y0,
            q,
            c: 1.0 + q + y0 - v0,
        }
    }

    #[inline]
    pub fn v(&self, s: f64) -> f64 {
        self.v0 + s
    }

    /// Queue level, evaluated as `y0 + s − c·(1 − e^(−s))` to stay accurate
    /// for small `s`.
    #[inline]
    pub fn y(&self, s: f64) -> f64 {
        self.y0 + s - self.c * one_minus_exp_neg(s)
    }

    /// Queue slope `v − y − q` at local time `s`.
    #[inline]
    pub fn y_slope(&self, s: f64) -> f64 {
        self.v(s) - self.y(s) - self.q
    }

    /// Full state at local time `s`.
    pub fn state(&self, s: f64) -> State {
        State {
            s,
            v: self.v(s),
            y: self.y(s),
        }
    }

    /// Interior minimum `(s₀, y(s₀))`, present when `c > 1`.
    ///
    /// At the minimum the exponential term equals 1, so `y(s₀) = v0 + s₀ − q`.
    pub fn interior_min(&self) -> Option<(f64, f64)> {
        if self.c > 1.0 {
            let s0 = self.c.ln();
            Some((s0, self.v0 + s0 - self.q))
        } else {
            None
        }
    }

    /// Smallest `s ≥ 0` with `y(s) = level` crossed in the given direction,
    /// or `None` when the level is never reached.
    ///
    /// If the trajectory starts exactly at the level and already moves in the
    /// requested direction the hit time is 0; in particular the return time
    /// to a full buffer is 0 when `v0 = q + y0` and the queue is flat.
    pub fn hit_level(&self, level: f64, direction: Direction) -> Result<Option<f64>> {
        let f = |s: f64| (self.y0 - level) + s - self.c * one_minus_exp_neg(s);
        let initial_slope = self.v0 - self.y0 - self.q; // equals 1 - c

        match direction {
            Direction::Falling => {
                if self.y0 == level {
                    return Ok(if initial_slope < 0.0 { Some(0.0) } else { None });
                }
                let Some((s0, _)) = self.interior_min() else {
                    return Ok(None); // monotone rising
                };
                if level > self.y0 {
                    return Ok(None);
                }
                // Decide reachability through f itself so the sign seen here
                // cannot disagree with the bracket handed to the solver.
                if f(s0) > 0.0 {
                    return Ok(None);
                }
                Ok(Some(brent("hit_level falling", f, 0.0, s0)?))
            }
            Direction::Rising => {
                if self.y0 == level && initial_slope >= 0.0 {
                    return Ok(Some(0.0));
                }
                let lo = match self.interior_min() {
                    Some((s0, y_min)) => {
                        if level < y_min {
                            // A dip starting at the level itself always
                            // re-crosses it; the computed minimum can sit a
                            // few ulps above when the dip is sub-noise.
                            return Ok(if self.y0 == level { Some(s0) } else { None });
                        }
                        s0
                    }
                    None => {
                        if level < self.y0 {
                            return Ok(None);
                        }
                        0.0
                    }
                };
                // y grows without bound, so an upper bracket always exists.
                let (lo, hi) = grow_upper("hit_level rising", f, lo, lo.max(1.0) * 2.0, false)?;
                Ok(Some(brent("hit_level rising", f, lo, hi)?))
            }
        }
    }

    /// `∫₀^L y ds`, exact.
    pub fn int_y(&self, len: f64) -> f64 {
        // y = c·e^{-s} + s + d with d = v0 - q - 1
        let d = self.v0 - self.q - 1.0;
        self.c * one_minus_exp_neg(len) + 0.5 * len * len + d * len
    }

    /// `∫₀^L y² ds`, exact.
    pub fn int_y_sq(&self, len: f64) -> f64 {
        let c = self.c;
        let d = self.v0 - self.q - 1.0;
        let e = (-len).exp();
        let sq = 0.5 * c * c * (1.0 - e * e);
        let cross = 2.0 * c * ((d + 1.0) - e * (len + d + 1.0));
        let poly = ((len + d).powi(3) - d.powi(3)) / 3.0;
        sq + cross + poly
    }

    /// `∫₀^L v ds`, exact.
    pub fn int_v(&self, len: f64) -> f64 {
        self.v0 * len + 0.5 * len * len
    }
}

/// Closed-form state after `s` RTTs of uninterrupted growth from `(v0, y0)`.
pub fn segment_state(v0: f64, y0: f64, q: f64, s: f64) -> (f64, f64) {
    let seg = Segment::new(v0, y0, q);
    (seg.v(s), seg.y(s))
}

/// Multiplicative reduction: the smallest `k ≥ 1` with `β^k·v < a` and the
/// reduced window. Needing `k > 1` means one reduction was not enough to pull
/// the rate below the pipe-plus-buffer threshold.
pub fn jump(v: f64, a: f64, beta: f64) -> Result<JumpResult> {
    if !(v > 0.0) || !(a > 0.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter {
            name: "jump(v, a, beta)",
            value: v,
            requirement: "v > 0, a > 0, beta in (0, 1)",
        });
    }
    let mut v_after = beta * v;
    let mut k = 1u32;
    const CAP: u32 = 100_000;
    while v_after >= a {
        v_after *= beta;
        k += 1;
        if k > CAP {
            return Err(Error::IterationLimit {
                context: "jump multiplicity",
                last: v_after,
            });
        }
    }
    Ok(JumpResult {
        v_after,
        multiplicity: k,
    })
}

/// Sliding time along the empty queue: from a floor touch at window
/// `v_at_touch ≤ q`, the queue stays empty while `v` grows at unit rate, so
/// the slide lasts `q − v_at_touch` RTTs.
pub fn slide_on_floor(v_at_touch: f64, q: f64) -> Result<f64> {
    if v_at_touch > q {
        return Err(Error::InvalidParameter {
            name: "v_at_touch",
            value: v_at_touch,
            requirement: "a value <= q (queue still draining at the touch)",
        });
    }
    Ok(q - v_at_touch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_time_returns_initial_state() {
        let (v, y) = segment_state(1.2, 0.3, 0.9, 0.0);
        assert_eq!((v, y), (1.2, 0.3));
        let st = Segment::new(1.2, 0.3, 0.9).state(0.0);
        assert_eq!((st.s, st.v, st.y), (0.0, 1.2, 0.3));
    }

    #[test]
    fn unit_coefficient_reduces() {
        // v0 = q + y0 makes the exponential coefficient exactly 1.
        let (q, y0) = (0.9, 0.35);
        let v0 = q + y0;
        for &s in &[0.1, 0.7, 2.3] {
            let (_, y) = segment_state(v0, y0, q, s);
            let expected = (-s).exp() + s - 1.0 + y0;
            assert!((y - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn one_cycle_closure_value() {
        // On the order-1 limit cycle at (β = 0.5, q = 0.9, b = 0.7), advancing
        // the post-jump state by the return time lands back near y = b.
        let (v, y) = segment_state(1.39, 0.7, 0.9, 0.39);
        assert!((y - 0.69923881814277929).abs() < 1e-12);
        assert!((y - 0.7).abs() < 1e-3);
        assert_eq!(v, 1.39 + 0.39);
    }

    #[test]
    fn segment_satisfies_ode() {
        // finite-difference slope of y matches v - y - q
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let q = rng.gen_range(0.05..5.0);
            let v0 = rng.gen_range(0.05..2.0 * q + 2.0);
            let y0 = rng.gen_range(0.0..3.0);
            let s = rng.gen_range(0.0..4.0);
            let seg = Segment::new(v0, y0, q);
            let h = 1e-6;
            let slope = (seg.y(s + h) - seg.y(s - h)) / (2.0 * h);
            let exact = seg.y_slope(s);
            let scale = exact.abs().max(1.0);
            assert!(
                (slope - exact).abs() / scale < 1e-6,
                "fd {slope} vs exact {exact} at v0={v0} y0={y0} q={q} s={s}"
            );
        }
    }

    #[test]
    fn jump_multiplicities() {
        let j = jump(1.5, 1.0, 0.5).unwrap();
        assert_eq!((j.v_after, j.multiplicity), (0.75, 1));
        let j = jump(2.5, 1.0, 0.5).unwrap();
        assert_eq!((j.v_after, j.multiplicity), (0.625, 2));
        // k starts at 1, never 0
        let j = jump(0.9, 1.0, 0.5).unwrap();
        assert_eq!((j.v_after, j.multiplicity), (0.45, 1));
    }

    #[test]
    fn jump_is_idempotent_in_outcome() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = rng.gen_range(0.1..5.0);
            let beta = rng.gen_range(0.05..0.95);
            let v = rng.gen_range(0.5 * a..20.0 * a);
            let first = jump(v, a, beta).unwrap();
            assert!(first.v_after < a);
            let again = jump(first.v_after, a, beta).unwrap();
            assert_eq!(again.multiplicity, 1);
            assert!((again.v_after - beta * first.v_after).abs() < 1e-15);
        }
    }

    #[test]
    fn hit_level_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut found = 0;
        for _ in 0..500 {
            let q = rng.gen_range(0.05..5.0);
            let b = rng.gen_range(0.01..3.0);
            let v0 = rng.gen_range(0.05..q + b);
            let seg = Segment::new(v0, b, q);
            for dir in [Direction::Rising, Direction::Falling] {
                let level = rng.gen_range(0.0..b);
                if let Some(s) = seg.hit_level(level, dir).unwrap() {
                    assert!((seg.y(s) - level).abs() < 1e-10, "residual too large");
                    found += 1;
                }
            }
        }
        assert!(found > 100);
    }

    #[test]
    fn immediate_hit_convention() {
        // flat-at-threshold start: v0 = q + b on a full buffer
        let (q, b) = (0.9, 0.7);
        let seg = Segment::new(q + b, b, q);
        assert_eq!(seg.hit_level(b, Direction::Rising).unwrap(), Some(0.0));
    }

    #[test]
    fn refill_time_from_empty_pipe() {
        // from (y=0, v=q) the refill time r solves e^{-r} + r - 1 = b
        let (q, b) = (0.9, 0.7);
        let seg = Segment::new(q, 0.0, q);
        let r = seg.hit_level(b, Direction::Rising).unwrap().unwrap();
        assert!(((-r).exp() + r - 1.0 - b).abs() < 1e-12);
    }

    #[test]
    fn slide_durations() {
        assert_eq!(slide_on_floor(0.9, 0.9).unwrap(), 0.0);
        assert_eq!(slide_on_floor(0.4, 0.9).unwrap(), 0.5);
        assert!(slide_on_floor(1.0, 0.9).is_err());
    }

    #[test]
    fn slide_threshold_single_touch() {
        // With v0 = q - S and (1 + b + S)·e^(-S) = 1, the trajectory from a
        // full buffer grazes the empty queue at exactly one point.
        let (q, b) = (0.9, 0.7);
        let s_thr = brent(
            "graze threshold",
            |s| (1.0 + b + s) * (-s).exp() - 1.0,
            1e-9,
            10.0,
        )
        .unwrap();
        assert!((s_thr - 0.9892696518677457).abs() < 1e-10);
        let seg = Segment::new(q - s_thr, b, q);
        let (s0, y_min) = seg.interior_min().unwrap();
        assert!(y_min.abs() < 1e-12);
        assert!((s0 - s_thr).abs() < 1e-9); // grazes exactly at the threshold time
        assert!(slide_on_floor(seg.v(s0), q).unwrap().max(0.0) < 1e-12);
    }

    #[test]
    fn integrals_match_quadrature() {
        // Simpson's rule as an independent check of the exact antiderivatives.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let q = rng.gen_range(0.05..5.0);
            let v0 = rng.gen_range(0.05..q + 2.0);
            let y0 = rng.gen_range(0.0..2.0);
            let len = rng.gen_range(0.01..4.0);
            let seg = Segment::new(v0, y0, q);
            let n = 4000;
            let h = len / n as f64;
            let (mut sy, mut sy2, mut sv) = (0.0, 0.0, 0.0);
            for i in 0..=n {
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let s = i as f64 * h;
                sy += w * seg.y(s);
                sy2 += w * seg.y(s) * seg.y(s);
                sv += w * seg.v(s);
            }
            let (sy, sy2, sv) = (sy * h / 3.0, sy2 * h / 3.0, sv * h / 3.0);
            assert!((seg.int_y(len) - sy).abs() < 1e-8 * sy.abs().max(1.0));
            assert!((seg.int_y_sq(len) - sy2).abs() < 1e-8 * sy2.abs().max(1.0));
            assert!((seg.int_v(len) - sv).abs() < 1e-8 * sv.abs().max(1.0));
        }
    }
}
