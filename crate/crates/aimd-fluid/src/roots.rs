//! Bracketed scalar root finding.
//!
//! Every transcendental equation in this crate is smooth and either monotone
//! or unimodal on a known interval, so all solving goes through guaranteed
//! brackets refined by Brent's method. No unbracketed Newton anywhere.

use crate::error::{Error, Result};

/// Absolute floor on the bracket width; together with the relative ulp
/// term this drives roots to machine precision, well inside the 1e-12
/// budget the rest of the crate assumes.
pub const X_TOL: f64 = 1e-15;
/// Residual scale the solved equations reach at their roots (their slopes
/// there are O(1) or better); asserted by tests, not used as a stop rule.
pub const RESIDUAL_TOL: f64 = 1e-12;
/// Iteration cap for the bracketed solvers.
pub const MAX_ITER: usize = 200;

/// `1 − e^(−x)` without cancellation for small `x`.
#[inline]
pub fn one_minus_exp_neg(x: f64) -> f64 {
    -f64::exp_m1(-x)
}

/// Brent's method on `[a, b]`; requires a sign change between the endpoints.
///
/// Converges when the bracket shrinks below [`X_TOL`] (plus a few ulps at
/// large magnitudes) or the residual drops below [`RESIDUAL_TOL`].
pub fn brent<F: Fn(f64) -> f64>(context: &'static str, f: F, a: f64, b: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);

    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { context, lo: a, hi: b });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * X_TOL;
        let xm = 0.5 * (c - b);
        // No residual-based stop: several solved equations vanish at the
        // bracket edge (f(0) = 0 families), where a small |f| does not mean
        // the root is near. Interval convergence plus the O(1) slopes at the
        // true roots still lands residuals at RESIDUAL_TOL scale.
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic interpolation, falling back to secant
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
    }
    Err(Error::IterationLimit { context, last: b })
}

/// Grows `hi` geometrically from `start` until `f(hi)` changes sign against
/// `f_lo_sign`, then returns the bracket `(prev, hi)`.
pub fn grow_upper<F: Fn(f64) -> f64>(
    context: &'static str,
    f: F,
    lo: f64,
    start: f64,
    f_lo_positive: bool,
) -> Result<(f64, f64)> {
    let mut prev = lo;
    let mut hi = start.max(lo * 2.0).max(1e-12);
    for _ in 0..2048 {
        let fh = f(hi);
        if (fh <= 0.0) == f_lo_positive {
            return Ok((prev, hi));
        }
        prev = hi;
        hi *= 2.0;
    }
    Err(Error::NoSignChange { context, lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_simple_root() {
        // x^2 = 2
        let r = brent("sqrt2", |x| x * x - 2.0, 0.0, 2.0).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn brent_rejects_bad_bracket() {
        assert!(matches!(
            brent("bad", |x| x * x + 1.0, -1.0, 1.0),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn brent_transcendental() {
        // e^{-r} + r - 1 = 0.05
        let r = brent("rise", |r| r - one_minus_exp_neg(r) - 0.05, 1e-300, 2.0).unwrap();
        assert!(((-r).exp() + r - 1.0 - 0.05).abs() < 1e-12);
    }

    #[test]
    fn one_minus_exp_neg_small_arg() {
        let x = 1e-14;
        let exact = x - x * x / 2.0;
        assert!((one_minus_exp_neg(x) - exact).abs() < 1e-28);
    }

    #[test]
    fn grow_upper_extends_bracket() {
        let f = |x: f64| 10.0 - x;
        let (lo, hi) = grow_upper("grow", f, 0.0, 1.0, true).unwrap();
        assert!(f(lo) > 0.0 && f(hi) <= 0.0);
    }
}
