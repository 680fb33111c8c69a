//! Minimal buffer for full link utilization.
//!
//! For a fixed pipe `μT` and decrease factor `β`, the smallest buffer with
//! `ḡ = μ` is `B₀ = m·b₀,N`, the buffer of the minimal-order critical cycle.
//! As the aggregate increment `m` grows (more synchronized connections),
//! `B₀` traces a sawtooth: it decreases within each interval
//! `[mᵢ, mᵢ₊₁)` of constant order `N = i+1`, where `mᵢ = μT(1−βⁱ)/βⁱ`, and
//! jumps upward at every breakpoint. The local maxima are eventually
//! enveloped by `f(m) = (1−β)²(μT)²/(2m)`.

use serde::{Deserialize, Serialize};

use crate::constants::{critical_buffer, min_order, solve_theta};
use crate::error::{Error, Result};

/// One sample of the minimal-buffer curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    /// Aggregate increment m (data units).
    pub m: f64,
    /// Minimal cycle order N at this m.
    pub n_min: u32,
    /// Minimal full-utilization buffer B₀ (data units).
    pub b_min: f64,
    /// Envelope value `(1−β)²(μT)²/(2m)`.
    pub envelope: f64,
}

/// The sampled minimal-buffer curve with its exact breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferCurve {
    /// Pipe size μT (data units).
    pub bdp: f64,
    pub beta: f64,
    pub samples: Vec<CurveSample>,
    /// Breakpoints `mᵢ = μT(1−βⁱ)/βⁱ` falling inside the sampled range.
    pub breakpoints: Vec<f64>,
}

/// A witness that the minimal buffer is not monotone in the increment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonMonotonicityWitness {
    pub m_small: f64,
    pub b_small: f64,
    pub m_large: f64,
    pub b_large: f64,
}

/// Smallest buffer achieving full utilization: `m · b₀,N(β, μT/m)`.
pub fn b_min(bdp: f64, m: f64, beta: f64) -> Result<f64> {
    if !(bdp > 0.0) || !bdp.is_finite() {
        return Err(Error::InvalidParameter {
            name: "bdp",
            value: bdp,
            requirement: "a finite value > 0",
        });
    }
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InvalidParameter {
            name: "m",
            value: m,
            requirement: "a finite value > 0",
        });
    }
    let q = bdp / m;
    let n = min_order(beta, q)?;
    let theta = solve_theta(beta, q, n)?;
    Ok(m * critical_buffer(theta))
}

/// Envelope of the sawtooth's local maxima.
pub fn envelope(bdp: f64, beta: f64, m: f64) -> f64 {
    let acc = (1.0 - beta) * bdp;
    acc * acc / (2.0 * m)
}

/// Breakpoints `mᵢ` (i ≥ 1) inside `(0, m_max]`, ascending.
pub fn breakpoints(bdp: f64, beta: f64, m_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut bi = beta;
    loop {
        let m_i = bdp * (1.0 - bi) / bi;
        if m_i > m_max {
            break;
        }
        if m_i > 0.0 {
            out.push(m_i);
        }
        bi *= beta;
        if out.len() > 4096 {
            break;
        }
    }
    out
}

/// Sample the minimal-buffer curve on `[m_lo, m_hi]`.
///
/// Breakpoints inside the range are inserted exactly, each preceded by a
/// sample at `mᵢ(1 − 1e-9)` so the upward jump survives any grid.
pub fn buffer_curve(bdp: f64, beta: f64, m_lo: f64, m_hi: f64, samples: usize) -> Result<BufferCurve> {
    if !(m_lo > 0.0) || !(m_hi >= m_lo) {
        return Err(Error::InvalidParameter {
            name: "m_range",
            value: m_lo,
            requirement: "0 < m_lo <= m_hi",
        });
    }
    if samples < 2 {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: samples as f64,
            requirement: "at least two samples",
        });
    }
    let mut grid: Vec<f64> = (0..samples)
        .map(|i| m_lo + (m_hi - m_lo) * i as f64 / (samples - 1) as f64)
        .collect();
    let marks = breakpoints(bdp, beta, m_hi);
    for &m_i in &marks {
        if m_i >= m_lo {
            grid.push(m_i * (1.0 - 1e-9));
            grid.push(m_i);
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    grid.dedup();

    let samples = grid
        .into_iter()
        .map(|m| {
            let q = bdp / m;
            let n = min_order(beta, q)?;
            Ok(CurveSample {
                m,
                n_min: n,
                b_min: b_min(bdp, m, beta)?,
                envelope: envelope(bdp, beta, m),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BufferCurve {
        bdp,
        beta,
        samples,
        breakpoints: marks.into_iter().filter(|&m| m >= m_lo).collect(),
    })
}

/// A pair `m_small < m_large` with `B₀(m_small) < B₀(m_large)`, straddling
/// the first breakpoint.
pub fn non_monotonicity_witness(bdp: f64, beta: f64) -> Result<NonMonotonicityWitness> {
    let m_1 = bdp * (1.0 - beta) / beta;
    let m_small = m_1 * (1.0 - 1e-6);
    let b_small = b_min(bdp, m_small, beta)?;
    let b_large = b_min(bdp, m_1, beta)?;
    debug_assert!(b_small < b_large);
    Ok(NonMonotonicityWitness {
        m_small,
        b_small,
        m_large: m_1,
        b_large,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_increment_approaches_scaled_pipe() {
        // B₀ → μT(1−β)/β as m → 0; at m = 0.01 it is within a packet of 600
        let v = b_min(600.0, 0.01, 0.5).unwrap();
        assert!((v - 599.75996200420936).abs() < 1e-6);
        assert!((594.0..=600.0).contains(&v));
    }

    #[test]
    fn ns_example_buffer() {
        // μT = 600 packets, m = 10 packets: q = 60, b₀ ≈ 50 → 500 packets
        let v = b_min(600.0, 10.0, 0.5).unwrap();
        assert!((v - 10.0 * 49.9855955458507).abs() < 1e-7);
    }

    #[test]
    fn vanishes_at_breakpoints_from_below() {
        // approaching m_N from below, B₀ tends to zero
        let m_1 = 600.0; // μT(1−β)/β at β = 0.5
        let v = b_min(600.0, m_1 * (1.0 - 1e-9), 0.5).unwrap();
        assert!(v < 1e-6, "B0 = {v}");
    }

    #[test]
    fn first_breakpoint_location() {
        let marks = breakpoints(600.0, 0.5, 2000.0);
        assert!((marks[0] - 600.0).abs() < 1e-12);
        assert!((marks[1] - 1800.0).abs() < 1e-12);
    }

    #[test]
    fn witness_straddles_breakpoint() {
        let w = non_monotonicity_witness(600.0, 0.5).unwrap();
        assert!(w.m_small < w.m_large);
        assert!(w.b_small < w.b_large);
    }

    #[test]
    fn sawtooth_structure() {
        let curve = buffer_curve(600.0, 0.5, 100.0, 4000.0, 80).unwrap();
        // decreasing within each order interval, jumping up at breakpoints
        for w in curve.samples.windows(2) {
            if w[0].n_min == w[1].n_min {
                assert!(
                    w[1].b_min < w[0].b_min + 1e-12,
                    "curve must decrease within an order interval"
                );
            } else {
                assert!(w[1].b_min > w[0].b_min, "curve must jump up at a breakpoint");
                assert_eq!(w[1].n_min, w[0].n_min + 1);
            }
        }
    }

    #[test]
    fn larger_order_needs_larger_buffer() {
        // just across a breakpoint the order increments and B₀ grows
        for mult in [1.0, 3.0] {
            let m_i = 600.0 * mult;
            let below = b_min(600.0, m_i * (1.0 - 1e-9), 0.5).unwrap();
            let at = b_min(600.0, m_i, 0.5).unwrap();
            assert!(at > below);
        }
    }

    #[test]
    fn local_maxima_approach_half_squared_pipe() {
        // m_{N−1}·B₀(m_{N−1}) → (μT(1−β))²/2 = 45000 for β = 0.5, μT = 600
        let beta: f64 = 0.5;
        let bdp = 600.0;
        for n in [8u32, 10, 12] {
            let m_prev = bdp * (1.0 - beta.powi(n as i32 - 1)) / beta.powi(n as i32 - 1);
            let v = b_min(bdp, m_prev, beta).unwrap();
            let product = m_prev * v;
            let target = 0.5 * (bdp * (1.0 - beta)).powi(2);
            assert!(
                (product / target - 1.0).abs() < 0.02,
                "n = {n}: {product} vs {target}"
            );
        }
    }

    #[test]
    fn envelope_tracks_maxima() {
        // the envelope approaches the local maxima as m grows
        let beta = 0.5;
        let bdp = 600.0;
        let m9 = bdp * (1.0 - 0.5f64.powi(9)) / 0.5f64.powi(9);
        let peak = b_min(bdp, m9, beta).unwrap();
        let env = envelope(bdp, beta, m9);
        assert!((peak / env - 1.0).abs() < 0.02, "{peak} vs {env}");
    }

    #[test]
    fn eventual_decay() {
        // B₀ falls below one unit once m is large enough
        let v = b_min(600.0, 1.0e7, 0.5).unwrap();
        assert!(v < 1.0);
    }
}
