//! Cross-checking the classifier against the event-driven simulator.
//!
//! For every cycle the classifier predicts, the simulator is seeded inside
//! that cycle's basin of attraction and must settle on a cycle with the same
//! order, the same shape and matching anchors. This harness is the primary
//! test instrument of the crate: any disagreement comes back as a structured
//! report rather than a panic.

use serde::{Deserialize, Serialize};

use crate::classifier::{ClassificationReport, CycleDescriptor};
use crate::error::Result;
use crate::sim::{lower_seed, run, upper_seed, SimConfig};

/// Agreement tolerance on the anchors `v0` and `s_cycle`.
pub const ANCHOR_TOL: f64 = 1e-8;

/// One predicted-vs-simulated comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleCheck {
    /// Initial window handed to the simulator.
    pub seed: f64,
    pub expected: CycleDescriptor,
    pub simulated: CycleDescriptor,
    pub order_match: bool,
    pub shape_match: bool,
    pub v0_error: f64,
    pub s_cycle_error: f64,
    pub ok: bool,
}

/// Structured mismatch report of one verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatorAgreement {
    pub checks: Vec<CycleCheck>,
    /// With two predicted cycles, whether the two seeds really reached two
    /// distinct limits.
    pub distinct_limits: Option<bool>,
    pub agreed: bool,
}

/// Seed the simulator in each predicted basin and compare the limits.
pub fn verify_classification(report: &ClassificationReport) -> Result<SimulatorAgreement> {
    let np = report.params;
    let fluid = np.synthetic_fluid();

    // Higher order lives in the lower basin; with a single cycle both seeds
    // must reach it.
    let seeds: Vec<(f64, &CycleDescriptor)> = match report.cycles.as_slice() {
        [only] => vec![(upper_seed(&np), only), (lower_seed(&np), only)],
        // ascending by order: the higher order attracts the lower basin
        [low_order, high_order] => vec![
            (lower_seed(&np), high_order),
            (upper_seed(&np), low_order),
        ],
        _ => {
            return Ok(SimulatorAgreement {
                checks: Vec::new(),
                distinct_limits: None,
                agreed: false,
            })
        }
    };

    let mut checks = Vec::with_capacity(seeds.len());
    let mut limits = Vec::with_capacity(seeds.len());
    for (seed, expected) in seeds {
        let cfg = SimConfig::new(fluid)?.with_v_init(seed);
        let sim = run(&cfg)?;
        let got = sim.limit_cycle;
        limits.push(got.v0);
        let v0_error = (got.v0 - expected.v0).abs();
        let s_cycle_error = (got.s_cycle - expected.s_cycle).abs();
        let order_match = got.order == expected.order;
        let shape_match = got.shape == expected.shape;
        let ok = order_match && shape_match && v0_error <= ANCHOR_TOL && s_cycle_error <= ANCHOR_TOL;
        checks.push(CycleCheck {
            seed,
            expected: *expected,
            simulated: got,
            order_match,
            shape_match,
            v0_error,
            s_cycle_error,
            ok,
        });
    }

    let distinct_limits = (report.cycles.len() == 2)
        .then(|| (limits[0] - limits[1]).abs() > 10.0 * ANCHOR_TOL);
    let agreed = checks.iter().all(|c| c.ok) && distinct_limits.unwrap_or(true);
    Ok(SimulatorAgreement {
        checks,
        distinct_limits,
        agreed,
    })
}
