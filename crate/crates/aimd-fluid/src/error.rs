//! Error conditions shared across the crate.

use std::fmt;

/// Library error conditions.
///
/// Numerical errors carry the last relevant value to help with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A model parameter violates its domain.
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// A root bracket could not be established (no sign change).
    NoSignChange { context: &'static str, lo: f64, hi: f64 },

    /// An iteration cap was reached before the stopping rule fired.
    IterationLimit { context: &'static str, last: f64 },

    /// Fixed-point iteration did not settle within the cycle cap.
    NoConvergence {
        context: &'static str,
        iterations: u64,
        last: f64,
    },

    /// No critical cycle of the requested order exists for this `q`.
    NoCriticalCycle { order: u32, q: f64, threshold: f64 },

    /// The closed-form average formulas require `q > A*_2`.
    OutsideSingleLossRegime { q: f64, a_star_2: f64 },

    /// The requested buffer falls in the other branch of the average formulas.
    WrongBranch { buffer: f64, knee: f64 },

    /// A constrained buffer-sizing problem has an empty feasible set.
    Infeasible { detail: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter {
                name,
                value,
                requirement,
            } => write!(f, "invalid parameter {name} = {value}: requires {requirement}"),
            Error::NoSignChange { context, lo, hi } => {
                write!(f, "{context}: no sign change on [{lo}, {hi}]")
            }
            Error::IterationLimit { context, last } => {
                write!(f, "{context}: iteration limit reached (last value {last})")
            }
            Error::NoConvergence {
                context,
                iterations,
                last,
            } => write!(
                f,
                "{context}: no convergence after {iterations} iterations (last value {last})"
            ),
            Error::NoCriticalCycle { order, q, threshold } => write!(
                f,
                "no critical cycle of order {order}: q = {q} must exceed {threshold}"
            ),
            Error::OutsideSingleLossRegime { q, a_star_2 } => write!(
                f,
                "closed-form averages need q > A*_2: q = {q}, A*_2 = {a_star_2}; \
                 use the simulator for empirical averages"
            ),
            Error::WrongBranch { buffer, knee } => write!(
                f,
                "buffer {buffer} belongs to the other branch (full-utilization knee at {knee})"
            ),
            Error::Infeasible { detail } => write!(f, "infeasible constraint: {detail}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
