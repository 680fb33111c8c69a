//! Event-driven simulator.
//!
//! The simulator is the crate's independent oracle: it never integrates
//! numerically and never reuses the analytic cycle formulas. Each run chains
//! exact closed-form segments between events — buffer full, one-RTT overflow
//! delay, multiplicative reduction, queue empty, slide along the empty
//! queue — detects the events by bracketed root finding on the segment
//! formulas, and declares a limit cycle once consecutive post-jump windows
//! agree to [`CONVERGENCE_TOL`].
//!
//! Averages are measured cycle-exactly: whole cycles only, with every
//! integral taken from the exact antiderivatives of the segment pieces.
//! Transformed time converts to wall time per segment through
//! `dt = (T + x/μ)·ds`.

use serde::{Deserialize, Serialize};

use crate::classifier::{CycleDescriptor, CycleShape};
use crate::error::{Error, Result};
use crate::params::{FluidParams, NormalizedParams};
use crate::segment::{jump, Direction, Segment};

/// Consecutive post-jump windows closer than this declare convergence.
pub const CONVERGENCE_TOL: f64 = 1e-12;
/// Floor touches shallower than this band are treated as grazes; the square
/// root in the slide length would otherwise blow float noise up to ~1e-6.
const GRAZE_TOL: f64 = 1e-12;
/// Band for labeling the limit-cycle shape from its queue minimum.
const SHAPE_TOL: f64 = 1e-9;
/// Interior samples per smooth segment when tracing.
const TRACE_SAMPLES: usize = 16;

/// Simulation setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: FluidParams,
    /// Initial scaled window v = w/m (> 0).
    pub v_init: f64,
    /// Initial scaled queue y = x/m, within [0, b].
    pub y_init: f64,
    /// Abort if no limit cycle is declared within this many cycles.
    pub max_cycles: u64,
    /// Whole cycles to measure after convergence (1 already suffices;
    /// 3 by default for redundancy).
    pub measure_cycles: u32,
    pub record_trace: bool,
}

impl SimConfig {
    /// Default configuration: start on a full buffer just under the
    /// overflow threshold (the upper basin seed).
    pub fn new(params: FluidParams) -> Result<Self> {
        let np = params.normalize()?;
        Ok(SimConfig {
            params,
            v_init: upper_seed(&np),
            y_init: np.b,
            max_cycles: 100_000,
            measure_cycles: 3,
            record_trace: false,
        })
    }

    /// Same, seeding the lower basin (just above β(q+b)).
    pub fn lower_basin(params: FluidParams) -> Result<Self> {
        let np = params.normalize()?;
        Ok(SimConfig {
            v_init: lower_seed(&np),
            ..SimConfig::new(params)?
        })
    }

    /// Configuration over a synthetic physical system realizing exactly the
    /// normalized triple (μ = m = 1, T = q).
    pub fn from_normalized(np: NormalizedParams) -> Result<Self> {
        SimConfig::new(np.synthetic_fluid())
    }

    pub fn with_v_init(mut self, v_init: f64) -> Self {
        self.v_init = v_init;
        self
    }
}

/// Seed just below the overflow threshold.
pub fn upper_seed(np: &NormalizedParams) -> f64 {
    let a = np.a();
    a - 1e-6 * a.min(1.0)
}

/// Seed just above the lowest admissible post-jump window.
pub fn lower_seed(np: &NormalizedParams) -> f64 {
    let a = np.a();
    np.beta * a + 1e-6 * a.min(1.0)
}

/// Phase of one path piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    /// Smooth closed-form evolution with the queue in the interior.
    Smooth,
    /// Empty queue, window below the pipe capacity: y ≡ 0.
    Slide,
    /// Full buffer during the one-RTT overflow delay: y ≡ b.
    Ceiling,
}

/// One piece of the simulated path with its exact integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSegment {
    pub kind: PhaseKind,
    pub s_start: f64,
    pub duration: f64,
    pub v_start: f64,
    pub y_start: f64,
    /// `∫ y ds` over the piece.
    pub int_y: f64,
    /// `∫ y² ds` over the piece.
    pub int_y_sq: f64,
    /// `∫ v ds` over the piece.
    pub int_v: f64,
}

/// Wall-clock duration of a path piece: `T·Δs + (m/μ)·∫y ds`.
pub fn time_convert(seg: &PathSegment, params: &FluidParams) -> f64 {
    params.delay * seg.duration + params.increment / params.capacity * seg.int_y
}

/// Trace event labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "segment")]
    Segment,
    #[serde(rename = "hit_b")]
    HitCeiling,
    #[serde(rename = "jump")]
    Jump,
    #[serde(rename = "hit_0")]
    HitFloor,
    #[serde(rename = "slide_end")]
    SlideEnd,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::Segment => "segment",
            EventKind::HitCeiling => "hit_b",
            EventKind::Jump => "jump",
            EventKind::HitFloor => "hit_0",
            EventKind::SlideEnd => "slide_end",
        }
    }
}

/// One trace sample: wall time, transformed time, state and event label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub s: f64,
    pub v: f64,
    pub y: f64,
    pub event: EventKind,
}

/// Simulation outcome with cycle-exact measured averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub limit_cycle: CycleDescriptor,
    /// Average sending rate (physical units/s).
    pub lambda_bar: f64,
    /// Average goodput (physical units/s); capped at μ during overflow.
    pub g_bar: f64,
    /// Average queue occupancy (physical units).
    pub x_bar: f64,
    /// Wall-clock cycle duration (seconds).
    pub t_cycle: f64,
    /// Cycle duration in RTT-counting time.
    pub s_cycle: f64,
    /// Multiplicity histogram over every jump of the run.
    pub jump_histogram: Vec<(u32, u64)>,
    pub cycles_to_converge: u64,
    /// Path pieces of the last measured cycle.
    pub cycle_segments: Vec<PathSegment>,
    pub trace: Option<Vec<TraceRow>>,
}

struct March {
    np: NormalizedParams,
    s: f64,
    t: f64,
    v: f64,
    y: f64,
    wall_scale: f64, // m/μ
    delay: f64,      // T
    recording: bool,
    segments: Vec<PathSegment>,
    trace: Option<Vec<TraceRow>>,
}

struct StepOutcome {
    v_post: f64,
    multiplicity: u32,
    s_len: f64,
    /// Unconstrained minimum of the first smooth piece (of the ghost dip
    /// when b = 0).
    dip_min: Option<f64>,
}

impl March {
    fn push_segment(&mut self, kind: PhaseKind, seg: &Segment, len: f64) {
        // slides pin the queue at zero; only the window integral survives
        let (int_y, int_y_sq) = match kind {
            PhaseKind::Smooth => (seg.int_y(len), seg.int_y_sq(len)),
            PhaseKind::Slide => (0.0, 0.0),
            PhaseKind::Ceiling => (seg.y0 * len, seg.y0 * seg.y0 * len),
        };
        let piece = PathSegment {
            kind,
            s_start: self.s,
            duration: len,
            v_start: seg.v0,
            y_start: seg.y0,
            int_y,
            int_y_sq,
            int_v: seg.int_v(len),
        };
        if let Some(rows) = self.trace.as_mut() {
            let n = if kind == PhaseKind::Smooth { TRACE_SAMPLES } else { 2 };
            for i in 0..n {
                let ds = len * i as f64 / n as f64;
                let local = Segment::new(seg.v0, seg.y0, self.np.q);
                let (v, y) = match kind {
                    PhaseKind::Smooth => (local.v(ds), local.y(ds)),
                    PhaseKind::Slide => (seg.v0 + ds, 0.0),
                    PhaseKind::Ceiling => (seg.v0 + ds, seg.y0),
                };
                let t = self.t
                    + self.delay * ds
                    + self.wall_scale
                        * match kind {
                            PhaseKind::Smooth => local.int_y(ds),
                            PhaseKind::Slide => 0.0,
                            PhaseKind::Ceiling => seg.y0 * ds,
                        };
                rows.push(TraceRow {
                    t,
                    s: self.s + ds,
                    v,
                    y,
                    event: EventKind::Segment,
                });
            }
        }
        self.t += self.delay * len + self.wall_scale * piece.int_y;
        self.s += len;
        self.v += len;
        if self.recording {
            self.segments.push(piece);
        }
    }

    fn event(&mut self, event: EventKind) {
        if let Some(rows) = self.trace.as_mut() {
            rows.push(TraceRow {
                t: self.t,
                s: self.s,
                v: self.v,
                y: self.y,
                event,
            });
        }
    }

    /// Advance to (and through) the next reduction. Entered either at a
    /// post-jump state on the buffer ceiling or at an arbitrary initial state.
    fn advance_one_jump(&mut self) -> Result<StepOutcome> {
        let np = self.np;
        let (q, b) = (np.q, np.b);
        let a = np.a();
        let s_begin = self.s;
        let mut dip_min = None;

        if b == 0.0 {
            // queue pinned at zero; overflow starts once the window fills
            // the pipe
            let v_entry = self.v;
            if self.v < q {
                let len = q - self.v;
                let seg = Segment::new(self.v, 0.0, q);
                self.push_segment(PhaseKind::Slide, &seg, len);
                self.v = q;
                self.event(EventKind::SlideEnd);
            }
            // track the unconstrained dip for shape labeling
            let ghost = Segment::new(v_entry, 0.0, q);
            dip_min = ghost.interior_min().map(|(_, m)| m);
            self.event(EventKind::HitCeiling);
        } else if self.y >= b && self.v >= a {
            // already overflowing (initial-state convention: zero return time)
            self.event(EventKind::HitCeiling);
        } else {
            let mut guard = 0;
            loop {
                guard += 1;
                debug_assert!(guard <= 4, "event loop must terminate in three phases");
                if self.y == 0.0 && self.v < q {
                    let len = q - self.v;
                    let seg = Segment::new(self.v, 0.0, q);
                    self.push_segment(PhaseKind::Slide, &seg, len);
                    self.v = q;
                    self.y = 0.0;
                    self.event(EventKind::SlideEnd);
                    continue;
                }
                let seg = Segment::new(self.v, self.y, q);
                let interior = seg.interior_min();
                if dip_min.is_none() {
                    dip_min = Some(interior.map_or(self.y, |(_, m)| m.min(self.y)));
                }
                let floor_touch = match interior {
                    Some((_, y_min)) if y_min < -GRAZE_TOL => {
                        seg.hit_level(0.0, Direction::Falling)?
                    }
                    _ => None,
                };
                match floor_touch {
                    Some(s_fall) => {
                        self.push_segment(PhaseKind::Smooth, &seg, s_fall);
                        self.y = 0.0;
                        self.event(EventKind::HitFloor);
                    }
                    None => {
                        let s_hit = seg
                            .hit_level(b, Direction::Rising)?
                            .expect("window growth always refills the buffer");
                        self.push_segment(PhaseKind::Smooth, &seg, s_hit);
                        self.y = b;
                        self.event(EventKind::HitCeiling);
                        break;
                    }
                }
            }
        }

        // one RTT of overflow before the sender reacts
        let ceiling = Segment::new(self.v, self.y, q);
        let piece_y = self.y;
        let piece = PathSegment {
            kind: PhaseKind::Ceiling,
            s_start: self.s,
            duration: 1.0,
            v_start: self.v,
            y_start: piece_y,
            int_y: piece_y,
            int_y_sq: piece_y * piece_y,
            int_v: ceiling.v0 + 0.5,
        };
        if let Some(rows) = self.trace.as_mut() {
            for i in 0..2 {
                let ds = 0.5 * i as f64;
                rows.push(TraceRow {
                    t: self.t + (self.delay + self.wall_scale * piece_y) * ds,
                    s: self.s + ds,
                    v: self.v + ds,
                    y: piece_y,
                    event: EventKind::Segment,
                });
            }
        }
        self.t += self.delay + self.wall_scale * piece_y;
        self.s += 1.0;
        self.v += 1.0;
        if self.recording {
            self.segments.push(piece);
        }

        let jumped = jump(self.v, a, np.beta)?;
        self.v = jumped.v_after;
        self.event(EventKind::Jump);

        Ok(StepOutcome {
            v_post: jumped.v_after,
            multiplicity: jumped.multiplicity,
            s_len: self.s - s_begin,
            dip_min,
        })
    }
}

/// Run the simulator to its limit cycle and measure cycle-exact averages.
pub fn run(cfg: &SimConfig) -> Result<SimResult> {
    cfg.params.validate()?;
    let np = cfg.params.normalize()?;
    if !(cfg.v_init > 0.0) || !cfg.v_init.is_finite() {
        return Err(Error::InvalidParameter {
            name: "v_init",
            value: cfg.v_init,
            requirement: "a finite value > 0",
        });
    }
    if !(cfg.y_init >= 0.0 && cfg.y_init <= np.b) {
        return Err(Error::InvalidParameter {
            name: "y_init",
            value: cfg.y_init,
            requirement: "a value within [0, b]",
        });
    }
    if cfg.measure_cycles == 0 {
        return Err(Error::InvalidParameter {
            name: "measure_cycles",
            value: 0.0,
            requirement: "at least one measured cycle",
        });
    }

    let mut march = March {
        np,
        s: 0.0,
        t: 0.0,
        v: cfg.v_init,
        y: cfg.y_init,
        wall_scale: cfg.params.increment / cfg.params.capacity,
        delay: cfg.params.delay,
        recording: false,
        segments: Vec::new(),
        trace: cfg.record_trace.then(Vec::new),
    };

    let mut histogram = std::collections::BTreeMap::new();
    let mut prev: Option<(f64, u32)> = None;
    let mut converged = None;
    let mut last_v = cfg.v_init;
    for cycle in 0..cfg.max_cycles {
        let out = march.advance_one_jump()?;
        *histogram.entry(out.multiplicity).or_insert(0u64) += 1;
        last_v = out.v_post;
        if let Some((pv, pk)) = prev {
            if (out.v_post - pv).abs() < CONVERGENCE_TOL && out.multiplicity == pk {
                converged = Some(cycle + 1);
                break;
            }
        }
        prev = Some((out.v_post, out.multiplicity));
    }
    let Some(cycles_to_converge) = converged else {
        return Err(Error::NoConvergence {
            context: "simulator limit cycle",
            iterations: cfg.max_cycles,
            last: last_v,
        });
    };

    // measure whole cycles with exact per-segment integrals
    march.recording = true;
    let mut s_total = 0.0;
    let mut last: Option<StepOutcome> = None;
    let mut cycle_segments = Vec::new();
    let mut int_y = 0.0;
    let mut int_y_sq = 0.0;
    let mut int_v = 0.0;
    let mut int_v_trough = 0.0;
    let mut overflow_rtts = 0u32;
    for i in 0..cfg.measure_cycles {
        march.segments.clear();
        let out = march.advance_one_jump()?;
        *histogram.entry(out.multiplicity).or_insert(0) += 1;
        s_total += out.s_len;
        for seg in &march.segments {
            int_y += seg.int_y;
            int_y_sq += seg.int_y_sq;
            int_v += seg.int_v;
            if seg.kind == PhaseKind::Ceiling {
                overflow_rtts += 1;
            } else {
                int_v_trough += seg.int_v;
            }
        }
        if i + 1 == cfg.measure_cycles {
            cycle_segments = std::mem::take(&mut march.segments);
        }
        last = Some(out);
    }
    let last = last.expect("at least one measured cycle");

    let p = &cfg.params;
    let (m, mu, t_prop) = (p.increment, p.capacity, p.delay);
    let n_cycles = f64::from(cfg.measure_cycles);
    let t_total = t_prop * s_total + m / mu * int_y;
    let lambda_bar = m * int_v / t_total;
    // goodput: the sender rate off the ceiling, the capacity during the
    // overflow RTTs (each worth μ·(T + B/μ) = m(q + b) of delivered data)
    let g_bar = (m * int_v_trough + f64::from(overflow_rtts) * m * np.a()) / t_total;
    let x_bar = (m * t_prop * int_y + m * m / mu * int_y_sq) / t_total;

    let shape = match last.dip_min {
        Some(dm) if dm < -SHAPE_TOL => CycleShape::Clipped,
        Some(dm) if dm <= SHAPE_TOL => CycleShape::Critical,
        Some(_) => CycleShape::Unclipped,
        None => CycleShape::Clipped, // b = 0: the queue floor is the path
    };
    let v0 = last.v_post;
    let y_min = last.dip_min.unwrap_or(0.0).max(0.0);
    let s0 = match shape {
        CycleShape::Clipped => None,
        _ => Some((1.0 + np.a() - v0).ln()),
    };
    let limit_cycle = CycleDescriptor {
        order: last.multiplicity,
        shape,
        v0,
        s1: last.s_len - 1.0,
        s0,
        y_min,
        s_cycle: last.s_len,
    };

    Ok(SimResult {
        limit_cycle,
        lambda_bar,
        g_bar,
        x_bar,
        t_cycle: t_total / n_cycles,
        s_cycle: s_total / n_cycles,
        jump_histogram: histogram.into_iter().collect(),
        cycles_to_converge,
        cycle_segments,
        trace: march.trace.take(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DataUnit;

    fn norm_cfg(beta: f64, q: f64, b: f64) -> SimConfig {
        SimConfig::from_normalized(NormalizedParams::new(beta, q, b).unwrap()).unwrap()
    }

    #[test]
    fn one_cycle_example() {
        let cfg = norm_cfg(0.5, 0.9, 0.7);
        let r = run(&cfg).unwrap();
        assert_eq!(r.limit_cycle.order, 1);
        assert_eq!(r.limit_cycle.shape, CycleShape::Unclipped);
        assert!((r.limit_cycle.v0 - 1.3915062764859738).abs() < 1e-9);
        assert!((r.limit_cycle.s_cycle - 1.3915062764859738).abs() < 1e-9);
        assert!((r.limit_cycle.y_min - 0.68088100401702883).abs() < 1e-8);
    }

    #[test]
    fn coexistence_seeds_find_distinct_cycles() {
        let np = NormalizedParams::new(0.5, 0.9, 0.3).unwrap();
        let hi = run(&SimConfig::from_normalized(np).unwrap()).unwrap();
        let lo = run(&SimConfig::lower_basin(np.synthetic_fluid()).unwrap()).unwrap();
        assert_eq!(hi.limit_cycle.order, 1);
        assert_eq!(lo.limit_cycle.order, 2);
        assert!((hi.limit_cycle.v0 - 1.1323603254182067).abs() < 1e-9);
        assert!((lo.limit_cycle.v0 - 0.65030362780974182).abs() < 1e-9);
    }

    #[test]
    fn clipped_cycle_small_buffer() {
        let cfg = norm_cfg(0.5, 0.9, 0.05);
        let r = run(&cfg).unwrap();
        assert_eq!(r.limit_cycle.order, 2);
        assert_eq!(r.limit_cycle.shape, CycleShape::Clipped);
        assert!((r.limit_cycle.v0 - 0.55845263620766395).abs() < 1e-9);
        assert!((r.limit_cycle.s_cycle - 1.6753579086229919).abs() < 1e-9);
        // the path really runs along the floor
        assert!(r
            .cycle_segments
            .iter()
            .any(|s| s.kind == PhaseKind::Slide && s.duration > 1e-3));
    }

    #[test]
    fn critical_cycle_grazes() {
        let b0 = crate::constants::critical_buffer(
            crate::constants::solve_theta(0.5, 0.9, 2).unwrap(),
        );
        let cfg = norm_cfg(0.5, 0.9, b0);
        let r = run(&cfg).unwrap();
        assert_eq!(r.limit_cycle.order, 2);
        assert_eq!(r.limit_cycle.shape, CycleShape::Critical);
        assert!(r.limit_cycle.y_min <= 1e-9);
    }

    #[test]
    fn empty_buffer_runs_minimal_order() {
        let cfg = norm_cfg(0.5, 0.9, 0.0);
        let r = run(&cfg).unwrap();
        assert_eq!(r.limit_cycle.order, 2);
        assert_eq!(r.limit_cycle.shape, CycleShape::Clipped);
        // v0 = β²(q+1); the cycle slides for q − v0 RTTs then overflows one
        assert!((r.limit_cycle.v0 - 0.25 * 1.9).abs() < 1e-12);
        assert!((r.limit_cycle.s_cycle - (0.9 - 0.475 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn window_is_piecewise_linear_and_jumps_exact() {
        let cfg = norm_cfg(0.5, 0.9, 0.3);
        let r = run(&SimConfig {
            record_trace: true,
            ..cfg
        })
        .unwrap();
        let trace = r.trace.unwrap();
        let mut prev: Option<&TraceRow> = None;
        for row in &trace {
            if let Some(p) = prev {
                assert!(row.s >= p.s, "trace must be ordered in s");
                if row.event != EventKind::Jump {
                    // unit slope between reductions
                    assert!(
                        (row.v - p.v - (row.s - p.s)).abs() < 1e-9,
                        "window must grow at unit rate"
                    );
                }
            }
            prev = Some(row);
        }
        // strictly increasing s across event rows of one kind
        let jumps: Vec<&TraceRow> = trace.iter().filter(|r| r.event == EventKind::Jump).collect();
        for w in jumps.windows(2) {
            assert!(w[1].s > w[0].s);
        }
    }

    #[test]
    fn wall_time_of_overflow_delay() {
        // the overflow RTT lasts T + B/μ seconds
        let params = FluidParams::new(2.0e6, 0.1, 5.0e4, 1.0e5, 0.5, DataUnit::Bits).unwrap();
        let cfg = SimConfig::new(params).unwrap();
        let r = run(&cfg).unwrap();
        let ceiling = r
            .cycle_segments
            .iter()
            .find(|s| s.kind == PhaseKind::Ceiling)
            .unwrap();
        let expected = params.delay + params.buffer / params.capacity;
        assert!((time_convert(ceiling, &params) - expected).abs() < 1e-12 * expected);
        // an empty-queue slide of length Δs lasts T·Δs
        if let Some(slide) = r.cycle_segments.iter().find(|s| s.kind == PhaseKind::Slide) {
            let want = params.delay * slide.duration;
            assert!((time_convert(slide, &params) - want).abs() < 1e-12 * want.max(1e-300));
        }
    }

    #[test]
    fn deterministic_reruns() {
        let cfg = norm_cfg(0.5, 0.9, 0.05);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trajectories_stay_inside_the_region() {
        // event points and segment extrema never leave 0 ≤ y ≤ b
        for (beta, q, b) in [(0.5, 0.9, 0.3), (0.5, 0.9, 0.05), (0.7, 2.0, 1.0), (0.3, 0.4, 0.2)] {
            let cfg = SimConfig {
                record_trace: true,
                ..norm_cfg(beta, q, b)
            };
            let r = run(&cfg).unwrap();
            for row in r.trace.unwrap() {
                assert!(
                    row.y >= -1e-12 && row.y <= b + 1e-12,
                    "y = {} outside [0, {b}] at ({beta}, {q})",
                    row.y
                );
            }
        }
    }

    #[test]
    fn rejects_bad_initial_state() {
        let mut cfg = norm_cfg(0.5, 0.9, 0.3);
        cfg.y_init = 0.4;
        assert!(run(&cfg).is_err());
        cfg.y_init = 0.1;
        cfg.v_init = -1.0;
        assert!(run(&cfg).is_err());
    }
}
