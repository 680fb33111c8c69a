//! Hybrid fluid model of AIMD congestion control sharing a Drop-Tail
//! bottleneck buffer.
//!
//! Aggregate window growth between losses follows `dw/dt = m/(T + x/μ)`;
//! when the queue `x` fills the buffer `B`, the window is cut by `β^k` one
//! round-trip later, with `k` chosen so the rate actually drops below the
//! pipe. Counting time in round trips (`ds = dt/(T + x/μ)`) and measuring
//! windows in units of the per-RTT increment `m` reduces everything to the
//! dimensionless triple `(β, q = μT/m, b = B/m)` with exact closed-form
//! trajectories between reductions.
//!
//! On top of that solution the crate provides:
//!
//! * [`segment`] — the closed-form trajectory pieces, hitting times, the
//!   multiplicative jump and the empty-queue slide;
//! * [`limit_map`] — return maps between reductions, their fixed points,
//!   basin boundary and guaranteed-convergent limits;
//! * [`constants`] — the derived constants (`N`, `D`, `C`, `θₖ`, `b₀ₖ`,
//!   `τₖ`, `A*ₖ`, `q*ₖ`, coexistence window) driving the taxonomy;
//! * [`classifier`] — exact classification of the limit cycles at
//!   `(β, q, b)` plus the single-loss-per-event conditions;
//! * [`pareto`] — closed-form cycle averages (`λ̄`, `ḡ`, `x̄`, `T_cycle`),
//!   buffer sweeps of the goodput/delay frontier and constrained sizing;
//! * [`sizing`] — the minimal full-utilization buffer as a sawtooth
//!   function of the aggregate increment;
//! * [`sim`] — an independent event-driven simulator used as the oracle
//!   for every analytic result;
//! * [`verify`] — the classifier-versus-simulator agreement harness.
//!
//! ```
//! use aimd_fluid::classifier::classify;
//!
//! // A small pipe with a mid-sized buffer: two limit cycles coexist and
//! // which one the system settles on depends on the initial state.
//! let report = classify(0.5, 0.9, 0.3).unwrap();
//! let orders: Vec<u32> = report.cycles.iter().map(|c| c.order).collect();
//! assert_eq!(orders, [1, 2]);
//! assert!(!report.single_jump_only);
//! ```

pub mod classifier;
pub mod constants;
pub mod error;
pub mod limit_map;
pub mod params;
pub mod pareto;
pub mod roots;
pub mod segment;
pub mod sim;
pub mod sizing;
pub mod verify;

pub use classifier::{classify, ClassificationReport, CycleDescriptor, CycleShape};
pub use error::{Error, Result};
pub use params::{DataUnit, FluidParams, JumpResult, NormalizedParams, State};
pub use sim::{run, SimConfig, SimResult};
