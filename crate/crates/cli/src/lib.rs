//! `rcsp` command-line front end.
//!
//! ```text
//! rcsp bounds   --snr-db 2 --bits 16 --increments 32,8,8,8,8
//! rcsp curve    --snr-db 2 --bits-list 16,32,64,128,256 --max-transmissions 5 --optimize
//! rcsp simulate --snr-db 2 --bits 16 --increments 21,3,3,3,3 --cycles 100000
//! ```
//!
//! Exit codes: 0 success, 1 numerical failure, 2 invalid flags or scheme,
//! 3 degenerate scheme (every attempt fails with probability one).
//! `RCSP_THREADS` caps the worker pool; results do not depend on it.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use rcsp_bounds::config::{Scheme, SchemeConfig};
use rcsp_bounds::joint::{joint_series_bounds, BoundPolicy};
use rcsp_bounds::optimizer::{fixed_step_scheme, one_bit_scheme, Objective, SearchSpace};
use rcsp_bounds::oracle::{exact_joint_integral, mc_joint_series};
use rcsp_bounds::performance::{expected_latency, mc_performance, performance_interval, simulate_decoding_time};
use rcsp_bounds::schedule::{radii, ChannelConfig, DecodingRadii, MessageSet, RadiusAssumption, TransmissionSchedule};
use rcsp_bounds::{Error, Method};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

/// Default seed for every random quantity.
pub const DEFAULT_SEED: u64 = 20_140_601;

/// Transmissions beyond which exact integration is not attempted.
const MAX_EXACT_M: usize = 3;

/// Column order of the curve CSV.
pub const CURVE_HEADER: [&str; 10] = [
    "k_bits",
    "m",
    "increments",
    "latency_lower",
    "latency_upper",
    "latency_exact_or_mc",
    "throughput_lower",
    "throughput_upper",
    "capacity",
    "flags",
];

#[derive(Debug, Parser)]
#[command(name = "rcsp", version, about = "Certified latency and throughput bounds for RCSP feedback schemes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Joint-error series intervals, oracle values and the performance interval.
    Bounds(BoundsArgs),
    /// One latency/throughput row per information-bit count.
    Curve(CurveArgs),
    /// Empirical decoding time under the restart rule.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundMethod {
    Trivial,
    Pair,
    General,
    Union,
    Decomposition,
    Inglot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveKind {
    /// Certified throughput lower bound.
    Bound,
    /// Monte Carlo throughput.
    Mc,
}

#[derive(Debug, Clone, Args)]
pub struct SchemeArgs {
    /// JSON scheme file; explicit flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    /// Information bits k = log2 M.
    #[arg(long)]
    pub bits: Option<u32>,
    /// Comma-separated increments I_1,...,I_m.
    #[arg(long, value_delimiter = ',')]
    pub increments: Option<Vec<u32>>,
    /// `optimistic` or `minkowski[:c]`.
    #[arg(long, value_parser = parse_radius)]
    pub radius: Option<RadiusAssumption>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Bound methods to combine (default: all).
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<BoundMethod>>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Monte Carlo paths for the oracle column; 0 disables it.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub snr_db: f64,
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
    pub bits_list: Vec<u32>,
    /// Transmissions m of the optimized schedules.
    #[arg(long, default_value_t = 5)]
    pub max_transmissions: usize,
    /// Optimize increments per k (the default scheme).
    #[arg(long, conflicts_with_all = ["one_bit", "step"])]
    pub optimize: bool,
    /// First block of k symbols, then 1-symbol steps to rate 1/3.
    #[arg(long, conflicts_with = "step")]
    pub one_bit: bool,
    /// First block of k symbols, then fixed steps of this size to rate 1/3.
    #[arg(long)]
    pub step: Option<u32>,
    #[arg(long, value_enum, default_value = "bound")]
    pub objective: ObjectiveKind,
    /// Distinct schedules the optimizer may evaluate per k.
    #[arg(long, default_value_t = 3000)]
    pub budget: usize,
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<BoundMethod>>,
    #[arg(long, value_parser = parse_radius)]
    pub radius: Option<RadiusAssumption>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write rows here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Messages to deliver.
    #[arg(long, default_value_t = 100_000)]
    pub cycles: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Monte Carlo paths for the formula-based latency; 0 disables it.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

fn parse_radius(s: &str) -> Result<RadiusAssumption, String> {
    match s.split_once(':') {
        None if s == "optimistic" => Ok(RadiusAssumption::Optimistic),
        None if s == "minkowski" => Ok(RadiusAssumption::Minkowski { c: 1.0 }),
        Some(("minkowski", c)) => {
            let c: f64 = c.parse().map_err(|_| format!("bad Minkowski constant {c:?}"))?;
            RadiusAssumption::minkowski(c).map_err(|e| e.to_string())
        }
        _ => Err(format!("expected optimistic or minkowski[:c], got {s:?}")),
    }
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DegenerateScheme(_) => EXIT_DEGENERATE,
            Error::Convergence { .. } | Error::UnsupportedTransmissions(_) => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

impl SchemeArgs {
    /// Merges the config file (if any) with explicit flags; flags win.
    pub fn resolve(&self) -> CliResult<SchemeConfig> {
        let base = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
                Some(SchemeConfig::from_json(&text)?)
            }
            None => None,
        };
        let snr_db = self.snr_db.or(base.as_ref().map(|b| b.snr_db));
        let k_bits = self.bits.or(base.as_ref().map(|b| b.k_bits));
        let increments = self.increments.clone().or(base.as_ref().map(|b| b.increments.clone()));
        let radius_assumption = self
            .radius
            .or(base.as_ref().map(|b| b.radius_assumption))
            .unwrap_or_default();
        Ok(SchemeConfig {
            snr_db: snr_db.ok_or_else(|| usage("missing --snr-db"))?,
            k_bits: k_bits.ok_or_else(|| usage("missing --bits"))?,
            increments: increments.ok_or_else(|| usage("missing --increments"))?,
            radius_assumption,
        })
    }
}

fn policy(methods: &Option<Vec<BoundMethod>>, k_bits: u32) -> BoundPolicy {
    let mut p = BoundPolicy::all().with_k_bits(k_bits);
    if let Some(ms) = methods {
        p.trivial = ms.contains(&BoundMethod::Trivial);
        p.chernoff_pair = ms.contains(&BoundMethod::Pair);
        p.general = ms.contains(&BoundMethod::General);
        p.union = ms.contains(&BoundMethod::Union);
        p.decomposition = ms.contains(&BoundMethod::Decomposition);
        p.inglot = ms.contains(&BoundMethod::Inglot);
    }
    p
}

/// `P_1..P_i` by exact integration for every prefix, when `m` is small enough.
fn exact_series(sched: &TransmissionSchedule, r: &DecodingRadii) -> Option<Vec<f64>> {
    if sched.m() > MAX_EXACT_M {
        return None;
    }
    (1..=sched.m())
        .map(|i| {
            let s = TransmissionSchedule::new(sched.increments()[..i].to_vec()).ok()?;
            let rr = DecodingRadii::new(r.r_squared()[..i].to_vec()).ok()?;
            exact_joint_integral(&s, &rr).ok()
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct SeriesRow {
    index: usize,
    lower: f64,
    upper: f64,
    method_lower: Method,
    method_upper: Method,
    exact: Option<f64>,
    mc_mean: Option<f64>,
    mc_std_error: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PerformanceRow {
    latency_lower: f64,
    latency_upper: f64,
    throughput_lower: f64,
    throughput_upper: f64,
    vacuous: bool,
    latency_exact: Option<f64>,
    latency_mc: Option<f64>,
    latency_mc_std_error: Option<f64>,
    throughput_mc: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BoundsReport {
    #[serde(flatten)]
    config: SchemeConfig,
    m: usize,
    capacity: f64,
    radii_sq: Vec<f64>,
    seed: u64,
    samples: u64,
    clamp_events: usize,
    series: Vec<SeriesRow>,
    performance: PerformanceRow,
}

fn to_csv<T: Serialize>(rows: &[T]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError {
            code: EXIT_NUMERIC,
            message: e.to_string(),
        })?;
    }
    let bytes = w.into_inner().map_err(|e| CliError {
        code: EXIT_NUMERIC,
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

pub fn cmd_bounds(args: &BoundsArgs) -> CliResult<String> {
    let config = args.scheme.resolve()?;
    let scheme: Scheme = config.build()?;
    let r = scheme.radii()?;
    let sched = &scheme.schedule;
    let k = config.k_bits;
    let series = joint_series_bounds(sched, &r, &policy(&args.methods, k));
    let perf = performance_interval(&series.intervals, sched.increments(), k)?;

    let exact = exact_series(sched, &r);
    let (mc, mc_perf) = if args.samples > 0 {
        (
            Some(mc_joint_series(sched, &r, args.samples, args.seed)?),
            mc_performance(sched, &r, k, args.samples, args.seed).ok(),
        )
    } else {
        (None, None)
    };
    let latency_exact = exact.as_ref().and_then(|e| {
        let mut p = vec![1.0];
        p.extend(e);
        expected_latency(&p, sched.increments()).ok()
    });

    let rows: Vec<SeriesRow> = series
        .intervals
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, b)| SeriesRow {
            index: i,
            lower: b.lower,
            upper: b.upper,
            method_lower: b.method_lower,
            method_upper: b.method_upper,
            exact: exact.as_ref().map(|e| e[i - 1]),
            mc_mean: mc.as_ref().map(|e| e[i - 1].mean),
            mc_std_error: mc.as_ref().map(|e| e[i - 1].std_error),
        })
        .collect();

    match args.format {
        Format::Csv => to_csv(&rows),
        Format::Json => Ok(to_json(&BoundsReport {
            m: sched.m(),
            capacity: scheme.channel.capacity(),
            radii_sq: r.r_squared().to_vec(),
            seed: args.seed,
            samples: args.samples,
            clamp_events: series.clamp_events,
            series: rows,
            performance: PerformanceRow {
                latency_lower: perf.latency.lower,
                latency_upper: perf.latency.upper,
                throughput_lower: perf.throughput.lower,
                throughput_upper: perf.throughput.upper,
                vacuous: perf.is_vacuous(scheme.channel.capacity()),
                latency_exact,
                latency_mc: mc_perf.map(|p| p.latency),
                latency_mc_std_error: mc_perf.map(|p| p.latency_std_error),
                throughput_mc: mc_perf.map(|p| p.throughput),
            },
            config,
        })),
    }
}

/// One row of the latency/throughput curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub k_bits: u32,
    pub m: usize,
    /// Increments joined by `;`.
    pub increments: String,
    pub latency_lower: f64,
    pub latency_upper: f64,
    /// Exact for `m <= 3`, Monte Carlo otherwise.
    pub latency_exact_or_mc: f64,
    pub throughput_lower: f64,
    pub throughput_upper: f64,
    pub capacity: f64,
    /// `;`-separated markers: `vacuous_upper`, `budget_exhausted`.
    pub flags: String,
}

fn curve_row(args: &CurveArgs, channel: ChannelConfig, k: u32) -> CliResult<CurveRow> {
    let messages = MessageSet::new(k)?;
    let assumption = args.radius.unwrap_or_default();
    let mut flags = Vec::new();
    let sched = if args.one_bit {
        one_bit_scheme(k)?
    } else if let Some(step) = args.step {
        fixed_step_scheme(k, step)?
    } else {
        let objective = match args.objective {
            ObjectiveKind::Bound => Objective::BoundLower,
            ObjectiveKind::Mc => Objective::McEstimate {
                samples: args.samples.max(1),
                seed: args.seed,
            },
        };
        let res = SearchSpace::new(messages, channel)
            .with_assumption(assumption)
            .optimize(args.max_transmissions, &objective, args.budget)?;
        if res.budget_exhausted {
            flags.push("budget_exhausted");
        }
        res.schedule
    };
    let r = radii(&channel, messages, &sched, assumption)?;
    let series = joint_series_bounds(&sched, &r, &policy(&args.methods, k));
    let perf = performance_interval(&series.intervals, sched.increments(), k)?;
    let reference = match exact_series(&sched, &r) {
        Some(e) => {
            let mut p = vec![1.0];
            p.extend(e);
            expected_latency(&p, sched.increments())?
        }
        None if args.samples > 0 => mc_performance(&sched, &r, k, args.samples, args.seed)?.latency,
        None => f64::NAN,
    };
    if perf.is_vacuous(channel.capacity()) {
        flags.insert(0, "vacuous_upper");
    }
    Ok(CurveRow {
        k_bits: k,
        m: sched.m(),
        increments: sched.increments().iter().map(u32::to_string).collect::<Vec<_>>().join(";"),
        latency_lower: perf.latency.lower,
        latency_upper: perf.latency.upper,
        latency_exact_or_mc: reference,
        throughput_lower: perf.throughput.lower,
        throughput_upper: perf.throughput.upper,
        capacity: channel.capacity(),
        flags: flags.join(";"),
    })
}

/// Rows in `--bits-list` order.
pub fn curve_rows(args: &CurveArgs) -> CliResult<Vec<CurveRow>> {
    if args.bits_list.is_empty() {
        return Err(usage("--bits-list is empty"));
    }
    if args.step == Some(0) {
        return Err(usage("--step must be at least 1"));
    }
    let channel = ChannelConfig::from_snr_db(args.snr_db)?;
    args.bits_list.par_iter().map(|&k| curve_row(args, channel, k)).collect()
}

pub fn cmd_curve(args: &CurveArgs) -> CliResult<String> {
    let rows = curve_rows(args)?;
    let text = match args.format {
        Format::Csv => to_csv(&rows)?,
        Format::Json => to_json(&rows),
    };
    match &args.out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    #[serde(flatten)]
    config: SchemeConfig,
    cycles: u64,
    seed: u64,
    mean_latency: f64,
    std_error: f64,
    mean_restarts: f64,
    p50: u64,
    p90: u64,
    p99: u64,
    max: u64,
    tau_histogram: Vec<u64>,
    expected_latency_mc: Option<f64>,
    expected_latency_mc_std_error: Option<f64>,
}

#[derive(Debug, Serialize)]
struct TauRow {
    tau: usize,
    count: u64,
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<String> {
    let config = args.scheme.resolve()?;
    let scheme = config.build()?;
    let r = scheme.radii()?;
    let rep = simulate_decoding_time(&scheme.schedule, &r, args.cycles, args.seed)?;
    let s = rep.summary;
    match args.format {
        Format::Csv => {
            let rows: Vec<TauRow> = s
                .tau_histogram
                .iter()
                .enumerate()
                .map(|(i, &count)| TauRow { tau: i + 1, count })
                .collect();
            to_csv(&rows)
        }
        Format::Json => {
            let formula = if args.samples > 0 {
                Some(mc_performance(&scheme.schedule, &r, config.k_bits, args.samples, args.seed ^ 0x5eed)?)
            } else {
                None
            };
            Ok(to_json(&SimulateReport {
                cycles: s.cycles,
                seed: s.seed,
                mean_latency: s.mean_latency,
                std_error: s.std_error,
                mean_restarts: s.mean_restarts,
                p50: s.p50,
                p90: s.p90,
                p99: s.p99,
                max: s.max,
                tau_histogram: s.tau_histogram,
                expected_latency_mc: formula.map(|f| f.latency),
                expected_latency_mc_std_error: formula.map(|f| f.latency_std_error),
                config,
            }))
        }
    }
}

/// Worker count from `RCSP_THREADS`, if set.
pub fn threads_from_env() -> CliResult<Option<usize>> {
    match std::env::var("RCSP_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(usage(format!("RCSP_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

pub fn execute(cli: &Cli, threads: Option<usize>) -> CliResult<String> {
    let job = || match &cli.command {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match threads {
        None => job(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| usage(e.to_string()))?
            .install(job),
    }
}

/// Parses `args`, runs the command and writes to the given streams.
/// Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = threads_from_env().and_then(|t| execute(&cli, t));
    match result {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

/// Command-line guide chapter, compiled as a doctest.
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod book_cli {}
