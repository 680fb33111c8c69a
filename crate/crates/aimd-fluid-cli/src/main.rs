//! Command-line front end for the AIMD/Drop-Tail fluid model.
//!
//! Four subcommands, all deterministic and scriptable:
//!
//! * `classify` — limit-cycle taxonomy of `(β, q, b)` as JSON;
//! * `pareto`   — buffer sweep of the goodput/delay frontier as CSV, with
//!   optional constrained optimum;
//! * `bmin`     — minimal full-utilization buffer across the aggregate
//!   increment, as CSV;
//! * `simulate` — one event-driven run as JSON, with an optional trace CSV.
//!
//! Exit codes: 2 for invalid parameters, 3 for an infeasible constraint.
//! Errors are machine-readable JSON on stderr. `AIMD_FLUID_THREADS` bounds
//! the sweep thread pool.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use aimd_fluid::classifier::{classify, ClassificationReport, CycleDescriptor};
use aimd_fluid::params::{DataUnit, FluidParams, NormalizedParams};
use aimd_fluid::pareto::{
    buffer_grid, knee_buffer, metrics, solve_constraint, Constraint, ParetoPoint, Regime,
};
use aimd_fluid::sim::{run as sim_run, SimConfig, SimResult};
use aimd_fluid::sizing::buffer_curve;
use aimd_fluid::Error as ModelError;

use output::{sig12, RunManifest};

#[derive(Parser)]
#[command(
    name = "aimd-fluid",
    version,
    about = "AIMD congestion control against a Drop-Tail buffer: cycle classification, \
             buffer sizing and exact simulation"
)]
struct Cli {
    /// Accepted for harness compatibility and ignored: the model is
    /// deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report which limit cycles exist for the given parameters (JSON).
    Classify(ClassifyArgs),
    /// Sweep the buffer and emit the goodput/delay frontier (CSV).
    Pareto(ParetoArgs),
    /// Minimal full-utilization buffer across the increment range (CSV).
    Bmin(BminArgs),
    /// Run the event-driven simulator once (JSON, optional trace CSV).
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum UnitArg {
    Packets,
    Bits,
}

impl From<UnitArg> for DataUnit {
    fn from(u: UnitArg) -> DataUnit {
        match u {
            UnitArg::Packets => DataUnit::Packets,
            UnitArg::Bits => DataUnit::Bits,
        }
    }
}

/// Either the normalized triple or the physical parameter set.
#[derive(Args, Clone)]
struct ModelArgs {
    /// Decrease factor β (normalized form).
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// BDP in increments, q = μT/m (normalized form).
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    /// Buffer in increments, b = B/m (normalized form).
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,

    /// Bottleneck capacity μ, data units per second (physical form).
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Two-way propagation delay T, seconds (physical form).
    #[arg(long, allow_negative_numbers = true)]
    rtt: Option<f64>,
    /// Aggregate AIMD increment per RTT, m = n·m₀ (physical form).
    #[arg(long, allow_negative_numbers = true)]
    m: Option<f64>,
    /// Buffer size B, data units (physical form).
    #[arg(long, allow_negative_numbers = true)]
    buffer: Option<f64>,
    /// Decrease factor β (physical form; alias of --beta).
    #[arg(long, allow_negative_numbers = true)]
    decrease: Option<f64>,

    /// Data unit for physical quantities.
    #[arg(long, value_enum, default_value = "packets")]
    unit: UnitArg,
}

struct ResolvedModel {
    normalized: NormalizedParams,
    physical: Option<FluidParams>,
    unit: DataUnit,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let code = match e {
            ModelError::Infeasible { .. } => 3,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            code: 2,
            message: format!("io error: {e}"),
        }
    }
}

/// The CLI keeps β well inside (0, 1) so jump multiplicities and brackets
/// stay bounded; the library itself accepts the open interval.
fn guard_beta(beta: f64) -> Result<(), CliError> {
    if !(0.01..=0.99).contains(&beta) {
        return Err(CliError::invalid(format!(
            "beta = {beta} outside the supported CLI range [0.01, 0.99]"
        )));
    }
    Ok(())
}

impl ModelArgs {
    fn resolve(&self) -> Result<ResolvedModel, CliError> {
        let beta = self.beta.or(self.decrease);
        let normalized_given = self.q.is_some() || self.b.is_some();
        let physical_given =
            self.mu.is_some() || self.rtt.is_some() || self.m.is_some() || self.buffer.is_some();
        match (normalized_given, physical_given) {
            (true, true) => Err(CliError::invalid(
                "give either the normalized triple (--beta --q --b) or the physical set \
                 (--mu --rtt --m --buffer), not both",
            )),
            (false, false) => Err(CliError::invalid(
                "missing parameters: --beta --q --b or --mu --rtt --m --buffer",
            )),
            (true, false) => {
                let (Some(beta), Some(q), Some(b)) = (beta, self.q, self.b) else {
                    return Err(CliError::invalid("normalized form needs --beta, --q and --b"));
                };
                guard_beta(beta)?;
                let normalized = NormalizedParams::new(beta, q, b)?;
                Ok(ResolvedModel {
                    normalized,
                    physical: None,
                    unit: self.unit.into(),
                })
            }
            (false, true) => {
                let (Some(mu), Some(rtt), Some(m), Some(buffer), Some(beta)) =
                    (self.mu, self.rtt, self.m, self.buffer, beta)
                else {
                    return Err(CliError::invalid(
                        "physical form needs --mu, --rtt, --m, --buffer and --beta",
                    ));
                };
                guard_beta(beta)?;
                let physical = FluidParams::new(mu, rtt, m, buffer, beta, self.unit.into())?;
                Ok(ResolvedModel {
                    normalized: physical.normalize()?,
                    physical: Some(physical),
                    unit: self.unit.into(),
                })
            }
        }
    }
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Pretty-print the JSON report.
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct ParetoArgs {
    /// Bottleneck capacity μ (data units/s).
    #[arg(long)]
    mu: f64,
    /// Two-way propagation delay T (seconds).
    #[arg(long)]
    rtt: f64,
    /// Aggregate increment m (data units).
    #[arg(long)]
    m: f64,
    /// Decrease factor β.
    #[arg(long)]
    beta: f64,
    /// Smallest buffer of the sweep (data units).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    b_min: f64,
    /// Largest buffer of the sweep (data units).
    #[arg(long)]
    b_max: f64,
    /// Number of sweep points.
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// Constrained optimum: `gbar>=X` (X may carry a `mu` suffix) or
    /// `xbar<=Y`.
    #[arg(long)]
    constraint: Option<String>,
    /// Outside the closed-form regime, fall back to simulator-measured
    /// averages (rows marked `empirical`).
    #[arg(long)]
    empirical: bool,
    #[arg(long, value_enum, default_value = "packets")]
    unit: UnitArg,
    /// Output CSV path (stdout when omitted; the manifest then goes to
    /// stderr).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BminArgs {
    /// Bottleneck capacity μ (data units/s).
    #[arg(long)]
    mu: f64,
    /// Two-way propagation delay T (seconds).
    #[arg(long)]
    rtt: f64,
    /// Decrease factor β.
    #[arg(long)]
    beta: f64,
    /// Increment range `LO:HI` (data units).
    #[arg(long)]
    m_range: String,
    /// Number of uniform samples (exact breakpoints are added on top).
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, value_enum, default_value = "packets")]
    unit: UnitArg,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Initial scaled window v = w/m (defaults to just under b + q).
    #[arg(long, allow_negative_numbers = true)]
    v_init: Option<f64>,
    /// Initial scaled queue y = x/m (defaults to b).
    #[arg(long)]
    y_init: Option<f64>,
    /// Cycle cap before giving up on convergence.
    #[arg(long, default_value_t = 100_000)]
    cycles: u64,
    /// Write a trajectory trace CSV to this path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Pretty-print the JSON result.
    #[arg(long)]
    pretty: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(seed) = cli.seed {
        eprintln!("note: --seed {seed} ignored; the model is deterministic");
    }
    let result = match &cli.command {
        Command::Classify(args) => cmd_classify(args),
        Command::Pareto(args) => cmd_pareto(args),
        Command::Bmin(args) => cmd_bmin(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = json!({ "error": e.message, "code": e.code });
            eprintln!("{payload}");
            ExitCode::from(e.code)
        }
    }
}

/// Run `f` inside a rayon pool sized by `AIMD_FLUID_THREADS`, if set.
fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    match std::env::var("AIMD_FLUID_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

#[derive(Serialize)]
struct ClassifyOutput {
    unit: DataUnit,
    physical: Option<FluidParams>,
    report: ClassificationReport,
    manifest: RunManifest,
}

fn cmd_classify(args: &ClassifyArgs) -> Result<(), CliError> {
    let model = args.model.resolve()?;
    let np = model.normalized;
    let report = classify(np.beta, np.q, np.b)?;
    let manifest = RunManifest::new(
        "classify",
        json!({
            "beta": np.beta, "q": np.q, "b": np.b,
            "physical": model.physical,
            "unit": model.unit,
        }),
    );
    let out = ClassifyOutput {
        unit: model.unit,
        physical: model.physical,
        report,
        manifest,
    };
    let rendered = if args.pretty {
        serde_json::to_string_pretty(&out)
    } else {
        serde_json::to_string(&out)
    }
    .expect("report serializes");
    println!("{rendered}");
    Ok(())
}

fn pareto_row(point: &ParetoPoint, role: &str) -> String {
    let regime = match point.regime {
        Regime::Clipped => "clipped",
        Regime::Unclipped => "unclipped",
        Regime::Empirical => "empirical",
    };
    format!(
        "{},{},{},{},{},{},{}\n",
        sig12(point.buffer),
        sig12(point.lambda_bar),
        sig12(point.g_bar),
        sig12(point.x_bar),
        sig12(point.t_cycle),
        regime,
        role
    )
}

fn parse_constraint(text: &str, capacity: f64) -> Result<Constraint, CliError> {
    let spec = text.replace(' ', "");
    if let Some(value) = spec.strip_prefix("gbar>=") {
        let target = if let Some(mult) = value.strip_suffix("mu") {
            let f: f64 = mult
                .parse()
                .map_err(|_| CliError::invalid(format!("bad goodput factor: {value}")))?;
            f * capacity
        } else {
            value
                .parse()
                .map_err(|_| CliError::invalid(format!("bad goodput bound: {value}")))?
        };
        Ok(Constraint::MinGoodput(target))
    } else if let Some(value) = spec.strip_prefix("xbar<=") {
        let target: f64 = value
            .parse()
            .map_err(|_| CliError::invalid(format!("bad queue bound: {value}")))?;
        Ok(Constraint::MaxQueue(target))
    } else {
        Err(CliError::invalid(
            "constraint must look like 'gbar>=X' (X may end in 'mu') or 'xbar<=Y'",
        ))
    }
}

fn simulate_point(params: &FluidParams) -> Result<ParetoPoint, CliError> {
    let sim = sim_run(&SimConfig::new(*params)?)?;
    Ok(ParetoPoint {
        buffer: params.buffer,
        lambda_bar: sim.lambda_bar,
        g_bar: sim.g_bar,
        x_bar: sim.x_bar,
        t_cycle: sim.t_cycle,
        s_cycle: sim.s_cycle,
        s_cd: None,
        s_ab: None,
        s1: None,
        regime: Regime::Empirical,
    })
}

fn cmd_pareto(args: &ParetoArgs) -> Result<(), CliError> {
    guard_beta(args.beta)?;
    if args.points == 0 {
        return Err(CliError::invalid("--points must be at least 1"));
    }
    if !(args.b_max >= args.b_min) || args.b_min < 0.0 {
        return Err(CliError::invalid("need 0 <= b-min <= b-max"));
    }
    let base = FluidParams::new(args.mu, args.rtt, args.m, 0.0, args.beta, args.unit.into())?;
    let grid = buffer_grid(args.b_min, args.b_max, args.points);

    let closed_form = knee_buffer(&base).is_ok();
    if !closed_form && !args.empirical {
        return Err(CliError::invalid(format!(
            "q = {} is outside the closed-form regime (q must exceed A*_2); \
             pass --empirical for simulator-measured averages",
            base.normalize()?.q
        )));
    }

    let points: Vec<ParetoPoint> = with_pool(|| {
        grid.par_iter()
            .map(|&b| {
                let p = base.with_buffer(b);
                if closed_form {
                    metrics(&p).map_err(CliError::from)
                } else {
                    simulate_point(&p)
                }
            })
            .collect::<Result<Vec<_>, _>>()
    })??;

    let mut csv = String::from("B,lambda_bar,g_bar,x_bar,T_cycle,regime,role\n");
    let knee = if closed_form {
        let knee_b = knee_buffer(&base)?;
        Some((knee_b, metrics(&base.with_buffer(knee_b))?))
    } else {
        None
    };
    let mut knee_written = false;
    for point in &points {
        if let Some((knee_b, knee_pt)) = &knee {
            if !knee_written && point.buffer > *knee_b {
                csv.push_str(&pareto_row(knee_pt, "knee"));
                knee_written = true;
            }
        }
        csv.push_str(&pareto_row(point, "grid"));
    }
    if let Some((_, knee_pt)) = &knee {
        if !knee_written {
            csv.push_str(&pareto_row(knee_pt, "knee"));
        }
    }

    let optimum = match &args.constraint {
        Some(text) => {
            let constraint = parse_constraint(text, args.mu)?;
            if !closed_form {
                return Err(CliError::invalid(
                    "constrained optimization needs the closed-form regime",
                ));
            }
            let best = solve_constraint(&base, constraint)?;
            csv.push_str(&pareto_row(&best, "optimum"));
            Some(best)
        }
        None => None,
    };

    let mut manifest = RunManifest::new(
        "pareto",
        json!({
            "mu": args.mu, "rtt": args.rtt, "m": args.m, "beta": args.beta,
            "b_min": args.b_min, "b_max": args.b_max, "points": args.points,
            "constraint": args.constraint, "empirical": args.empirical,
            "unit": DataUnit::from(args.unit),
        }),
    );
    match &args.out {
        Some(path) => {
            manifest.emit(path, csv.as_bytes())?;
            manifest.write_sidecar(path)?;
        }
        None => {
            print!("{csv}");
            eprintln!("{}", serde_json::to_string(&manifest).expect("manifest"));
        }
    }
    if let Some(best) = optimum {
        eprintln!(
            "optimum: B = {} ({}), g_bar = {}, x_bar = {}",
            sig12(best.buffer),
            args.unit_label(),
            sig12(best.g_bar),
            sig12(best.x_bar)
        );
    }
    Ok(())
}

impl ParetoArgs {
    fn unit_label(&self) -> &'static str {
        match self.unit {
            UnitArg::Packets => "packets",
            UnitArg::Bits => "bits",
        }
    }
}

fn cmd_bmin(args: &BminArgs) -> Result<(), CliError> {
    guard_beta(args.beta)?;
    let (lo, hi) = args
        .m_range
        .split_once(':')
        .ok_or_else(|| CliError::invalid("--m-range must be LO:HI"))?;
    let lo: f64 = lo
        .parse()
        .map_err(|_| CliError::invalid(format!("bad m-range start: {lo}")))?;
    let hi: f64 = hi
        .parse()
        .map_err(|_| CliError::invalid(format!("bad m-range end: {hi}")))?;
    let bdp = args.mu * args.rtt;
    let curve = buffer_curve(bdp, args.beta, lo, hi, args.samples)?;

    let mut csv = String::from("m,n_min,b_min,envelope\n");
    for sample in &curve.samples {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            sig12(sample.m),
            sample.n_min,
            sig12(sample.b_min),
            sig12(sample.envelope)
        ));
    }

    let mut manifest = RunManifest::new(
        "bmin",
        json!({
            "mu": args.mu, "rtt": args.rtt, "beta": args.beta,
            "m_range": [lo, hi], "samples": args.samples,
            "unit": DataUnit::from(args.unit),
            "breakpoints": curve.breakpoints,
        }),
    );
    match &args.out {
        Some(path) => {
            manifest.emit(path, csv.as_bytes())?;
            manifest.write_sidecar(path)?;
        }
        None => {
            print!("{csv}");
            eprintln!("{}", serde_json::to_string(&manifest).expect("manifest"));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SimSummary {
    limit_cycle: CycleDescriptor,
    lambda_bar: f64,
    g_bar: f64,
    x_bar: f64,
    t_cycle: f64,
    s_cycle: f64,
    jump_histogram: Vec<(u32, u64)>,
    cycles_to_converge: u64,
}

impl From<&SimResult> for SimSummary {
    fn from(r: &SimResult) -> Self {
        SimSummary {
            limit_cycle: r.limit_cycle,
            lambda_bar: r.lambda_bar,
            g_bar: r.g_bar,
            x_bar: r.x_bar,
            t_cycle: r.t_cycle,
            s_cycle: r.s_cycle,
            jump_histogram: r.jump_histogram.clone(),
            cycles_to_converge: r.cycles_to_converge,
        }
    }
}

#[derive(Serialize)]
struct SimulateOutput {
    unit: DataUnit,
    params: FluidParams,
    result: SimSummary,
    trace_file: Option<String>,
    manifest: RunManifest,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let model = args.model.resolve()?;
    let params = model
        .physical
        .unwrap_or_else(|| model.normalized.synthetic_fluid());
    let mut cfg = SimConfig::new(params)?;
    if let Some(v) = args.v_init {
        cfg.v_init = v;
    }
    if let Some(y) = args.y_init {
        cfg.y_init = y;
    }
    cfg.max_cycles = args.cycles;
    cfg.record_trace = args.trace.is_some();

    let result = sim_run(&cfg)?;

    let mut manifest = RunManifest::new(
        "simulate",
        json!({
            "params": params,
            "v_init": cfg.v_init,
            "y_init": cfg.y_init,
            "max_cycles": cfg.max_cycles,
            "unit": model.unit,
        }),
    );

    let trace_file = match (&args.trace, &result.trace) {
        (Some(path), Some(rows)) => {
            let mut csv = String::from("t_seconds,s,v,y,event\n");
            for row in rows {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    sig12(row.t),
                    sig12(row.s),
                    sig12(row.v),
                    sig12(row.y),
                    row.event.label()
                ));
            }
            manifest.emit(path, csv.as_bytes())?;
            manifest.write_sidecar(path)?;
            Some(path.display().to_string())
        }
        _ => None,
    };

    let out = SimulateOutput {
        unit: model.unit,
        params,
        result: SimSummary::from(&result),
        trace_file,
        manifest,
    };
    let rendered = if args.pretty {
        serde_json::to_string_pretty(&out)
    } else {
        serde_json::to_string(&out)
    }
    .expect("result serializes");
    println!("{rendered}");
    Ok(())
}
