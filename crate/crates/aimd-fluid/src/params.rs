//! Model parameters and state.
//!
//! Physical inputs live in [`FluidParams`]; all analysis runs on the
//! dimensionless triple [`NormalizedParams`] `(β, q, b)` obtained by
//! measuring windows and queues in units of the aggregate per-RTT
//! increment `m` and counting time in RTTs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Data unit used for capacities, buffers and window increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataUnit {
    #[default]
    Packets,
    Bits,
}

impl std::fmt::Display for DataUnit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataUnit::Packets => write!(f, "packets"),
            DataUnit::Bits => write!(f, "bits"),
        }
    }
}

/// Physical parameters of the bottleneck and the aggregate AIMD source.
///
/// With `n` synchronized connections each adding `m₀` per RTT, the aggregate
/// increment is `m = n·m₀`; only the product enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    /// Bottleneck capacity μ (data units per second, > 0).
    pub capacity: f64,
    /// Two-way propagation delay T (seconds, > 0).
    pub delay: f64,
    /// Aggregate window increment per RTT, m (data units, > 0).
    pub increment: f64,
    /// Buffer size B (data units, ≥ 0).
    pub buffer: f64,
    /// Multiplicative decrease factor β ∈ (0, 1).
    pub beta: f64,
    /// Data unit the above quantities are expressed in.
    pub unit: DataUnit,
}

impl FluidParams {
    pub fn new(
        capacity: f64,
        delay: f64,
        increment: f64,
        buffer: f64,
        beta: f64,
        unit: DataUnit,
    ) -> Result<Self> {
        let p = FluidParams {
            capacity,
            delay,
            increment,
            buffer,
            beta,
            unit,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("capacity", self.capacity)?;
        require_positive("delay", self.delay)?;
        require_positive("increment", self.increment)?;
        if !self.buffer.is_finite() || self.buffer < 0.0 {
            return Err(Error::InvalidParameter {
                name: "buffer",
                value: self.buffer,
                requirement: "a finite value >= 0",
            });
        }
        check_beta(self.beta)?;
        Ok(())
    }

    /// Bandwidth-delay product μT in data units.
    pub fn bdp(&self) -> f64 {
        self.capacity * self.delay
    }

    /// Reduce to the dimensionless triple `(β, q = μT/m, b = B/m)`.
    pub fn normalize(&self) -> Result<NormalizedParams> {
        self.validate()?;
        NormalizedParams::new(
            self.beta,
            self.bdp() / self.increment,
            self.buffer / self.increment,
        )
    }

    /// Same physical system with a different buffer.
    pub fn with_buffer(&self, buffer: f64) -> Self {
        FluidParams { buffer, ..*self }
    }
}

/// The dimensionless parameter triple driving the whole analysis.
///
/// `q` is the pipe size and `b` the buffer size, both counted in per-RTT
/// increments; `A = b + q` is the overflow threshold for the scaled total
/// window `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedParams {
    /// Decrease factor β ∈ (0, 1).
    pub beta: f64,
    /// BDP in increments, q = μT/m (> 0).
    pub q: f64,
    /// Buffer in increments, b = B/m (≥ 0).
    pub b: f64,
}

impl NormalizedParams {
    pub fn new(beta: f64, q: f64, b: f64) -> Result<Self> {
        check_beta(beta)?;
        require_positive("q", q)?;
        if !b.is_finite() || b < 0.0 {
            return Err(Error::InvalidParameter {
                name: "b",
                value: b,
                requirement: "a finite value >= 0",
            });
        }
        Ok(NormalizedParams { beta, q, b })
    }

    /// Overflow threshold A = b + q.
    pub fn a(&self) -> f64 {
        self.b + self.q
    }

    /// A synthetic physical system with μ = m = 1 and T = q seconds,
    /// normalizing back to exactly this triple.
    pub fn synthetic_fluid(&self) -> FluidParams {
        FluidParams {
            capacity: 1.0,
            delay: self.q,
            increment: 1.0,
            buffer: self.b,
            beta: self.beta,
            unit: DataUnit::Packets,
        }
    }
}

/// Instantaneous state in transformed time: `s` counts RTTs, `v = w/m` is
/// the scaled total window, `y = x/m` the scaled queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub s: f64,
    pub v: f64,
    pub y: f64,
}

/// Outcome of a multiplicative window reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpResult {
    /// Window right after the reduction, `β^k · v`.
    pub v_after: f64,
    /// Number of consecutive reductions applied (k ≥ 1).
    pub multiplicity: u32,
}

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::InvalidParameter {
            name,
            value,
            requirement: "a finite value > 0",
        });
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta <= 0.0 || beta >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            requirement: "a value in (0, 1)",
        });
    }
    Ok(())
}
