//! Command-line front end: argument validation, CSV/JSON emission and the
//! `trace`, `sweep`, `preset` and `verify` commands.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

use crate::engine::{prefix_targets, CoinKind, EngineError, UnknownCoin, WalkConfig};
use crate::experiments::{
    default_t_max, figure_presets, find_preset, geometric_grid, run_scenario, run_sweep_preset,
    sweep_loop_weight, variant_presets, ExperimentError, PeakRule, Preset, ProbabilityTrace,
    SweepQuantity, SweepResult, UnknownPeakRule, DEFAULT_GRID,
};
use crate::graph::{GraphError, GraphSpec, VertexId};
use crate::verify::{self, VerifyReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("--coin: {0}")]
    UnknownCoin(#[from] UnknownCoin),
    #[error("--peak: {0}")]
    UnknownPeakRule(#[from] UnknownPeakRule),
    #[error("--loop: coin {0} has no self-loop, drop --loop")]
    LoopWithStandardCoin(CoinKind),
    #[error("--loop: coin {0} is lackadaisical and needs a self-loop weight")]
    MissingLoop(CoinKind),
    #[error("--loop: self-loop weight must be a finite number > 0, got {0}")]
    NonPositiveLoop(f64),
    #[error("--graph: {0}")]
    Graph(#[from] GraphError),
    #[error("{flag}: {count} targets requested but {graph} has only {vertex_count} vertices")]
    TooManyTargets {
        flag: &'static str,
        count: usize,
        graph: GraphSpec,
        vertex_count: usize,
    },
    #[error("{flag}: {reason}")]
    InvalidValue { flag: &'static str, reason: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("JWALK_THREADS: expected a positive integer, got '{0}'")]
    Threads(String),
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("verification failed ({0} checks failed)")]
    VerificationFailed(usize),
}

impl CliError {
    /// 0 success, 1 validation error, 2 verification failure, 3 I/O error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Io { .. } => 3,
            CliError::VerificationFailed(_) => 2,
            _ => 1,
        }
    }

    fn invalid(flag: &'static str, reason: impl Into<String>) -> Self {
        CliError::InvalidValue {
            flag,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "jwalk",
    version,
    about = "Coined quantum walk search on Johnson graphs"
)]
struct RawCli {
    #[command(subcommand)]
    command: RawCommand,
}

#[derive(Debug, Subcommand)]
enum RawCommand {
    /// Success probability per step for one coin and one or more target counts.
    Trace(RawTrace),
    /// Peak probability and running time as a function of the self-loop weight.
    Sweep(RawSweep),
    /// Run or list the figure presets.
    Preset(RawPreset),
    /// Dense-oracle, unitarity and Grover-law self-checks.
    Verify(RawVerify),
}

#[derive(Debug, Args)]
struct RawTrace {
    /// Johnson graph as "n,k".
    #[arg(long)]
    graph: String,
    /// Coin: g, grov, l or skw.
    #[arg(long)]
    coin: String,
    /// Self-loop weight (g and l only).
    #[arg(long = "loop")]
    loop_weight: Option<f64>,
    /// Target counts, comma separated; marks the first M vertices.
    #[arg(long, conflicts_with = "target_set")]
    targets: Option<String>,
    /// Explicit target ranks, comma separated.
    #[arg(long = "target-set")]
    target_set: Option<String>,
    /// Step budget (default 10 * ceil(pi * sqrt(N (d + l)) / 2)).
    #[arg(long)]
    steps: Option<usize>,
    /// Peak rule: first or global.
    #[arg(long, default_value = "first")]
    peak: String,
    /// CSV output path; a sidecar JSON is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RawSweep {
    #[arg(long)]
    graph: String,
    /// Lackadaisical coins to sweep, comma separated (g, l).
    #[arg(long, default_value = "g,l")]
    coin: String,
    /// Number of prefix targets.
    #[arg(long, default_value_t = 1)]
    targets: usize,
    /// Geometric grid "lo,hi,count".
    #[arg(long, conflicts_with = "loops")]
    grid: Option<String>,
    /// Explicit strictly increasing weights, comma separated.
    #[arg(long)]
    loops: Option<String>,
    /// Fixed step budget for every grid point.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value = "first")]
    peak: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RawPreset {
    /// Preset names to run.
    names: Vec<String>,
    /// List the figure presets.
    #[arg(long)]
    list: bool,
    /// List the variant presets.
    #[arg(long)]
    variants: bool,
    /// Run every figure preset.
    #[arg(long)]
    all: bool,
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: PathBuf,
    /// Override the step budget.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value = "first")]
    peak: String,
}

#[derive(Debug, Args)]
struct RawVerify {
    /// Engine against the dense-matrix oracle on J(4,2), J(5,1), J(5,2).
    #[arg(long)]
    oracle: bool,
    /// Norm drift of every coin on J(13,3).
    #[arg(long)]
    unitarity: bool,
    /// Grover coin single-target peak time and probability.
    #[arg(long = "grover-law")]
    grover_law: bool,
    /// Step count for the unitarity check.
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// How the targets of a trace are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    /// One column per count, each marking ranks `0..M`.
    Prefix(Vec<usize>),
    /// A single column with these ranks.
    Explicit(Vec<VertexId>),
}

impl TargetSpec {
    pub fn columns(&self) -> Vec<Vec<VertexId>> {
        match self {
            TargetSpec::Prefix(counts) => counts.iter().map(|&m| prefix_targets(m)).collect(),
            TargetSpec::Explicit(set) => vec![set.clone()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSpec {
    pub graph: GraphSpec,
    pub coin: CoinKind,
    pub loop_weight: f64,
    pub targets: TargetSpec,
    pub t_max: usize,
    pub peak: PeakRule,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub graph: GraphSpec,
    pub coins: Vec<CoinKind>,
    pub target_count: usize,
    pub grid: Vec<f64>,
    pub t_max: Option<usize>,
    pub peak: PeakRule,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PresetAction {
    List,
    ListVariants,
    Run(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetSpec {
    pub action: PresetAction,
    pub out_dir: PathBuf,
    pub t_max: Option<usize>,
    pub peak: PeakRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySpec {
    pub oracle: bool,
    pub unitarity: bool,
    pub grover_law: bool,
    pub steps: usize,
    pub report: Option<PathBuf>,
}

/// A validated command line.
#[derive(Debug, Clone, PartialEq)]
pub enum RunSpec {
    Trace(TraceSpec),
    Sweep(SweepSpec),
    Preset(PresetSpec),
    Verify(VerifySpec),
}

fn parse_list<T: std::str::FromStr>(flag: &'static str, value: &str) -> Result<Vec<T>, CliError> {
    value
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<T>()
                .map_err(|_| CliError::invalid(flag, format!("cannot parse '{part}' in '{value}'")))
        })
        .collect()
}

fn parse_graph(value: &str) -> Result<GraphSpec, CliError> {
    let parts: Vec<usize> = parse_list("--graph", value)?;
    match parts[..] {
        [n, k] => Ok(GraphSpec::new(n, k)?),
        _ => Err(CliError::invalid(
            "--graph",
            format!("expected 'n,k', got '{value}'"),
        )),
    }
}

fn check_loop(coin: CoinKind, loop_weight: Option<f64>) -> Result<f64, CliError> {
    match (coin.is_lackadaisical(), loop_weight) {
        (false, Some(_)) => Err(CliError::LoopWithStandardCoin(coin)),
        (false, None) => Ok(0.0),
        (true, None) => Err(CliError::MissingLoop(coin)),
        (true, Some(l)) if !(l.is_finite() && l > 0.0) => Err(CliError::NonPositiveLoop(l)),
        (true, Some(l)) => Ok(l),
    }
}

fn check_steps(steps: Option<usize>) -> Result<Option<usize>, CliError> {
    match steps {
        Some(0) => Err(CliError::invalid(
            "--steps",
            "step budget must be at least 1",
        )),
        other => Ok(other),
    }
}

fn check_count(flag: &'static str, graph: GraphSpec, count: usize) -> Result<(), CliError> {
    if count > graph.vertex_count() {
        return Err(CliError::TooManyTargets {
            flag,
            count,
            graph,
            vertex_count: graph.vertex_count(),
        });
    }
    Ok(())
}

fn validate_trace(raw: RawTrace) -> Result<TraceSpec, CliError> {
    let graph = parse_graph(&raw.graph)?;
    let coin: CoinKind = raw.coin.parse()?;
    let loop_weight = check_loop(coin, raw.loop_weight)?;
    let peak: PeakRule = raw.peak.parse()?;
    let targets = match (raw.targets, raw.target_set) {
        (Some(counts), None) => {
            let counts: Vec<usize> = parse_list("--targets", &counts)?;
            let mut seen = counts.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != counts.len() {
                return Err(CliError::invalid(
                    "--targets",
                    "target counts must be distinct",
                ));
            }
            for &m in &counts {
                check_count("--targets", graph, m)?;
            }
            TargetSpec::Prefix(counts)
        }
        (None, Some(set)) => {
            let ranks: Vec<usize> = parse_list("--target-set", &set)?;
            check_count("--target-set", graph, ranks.len())?;
            let mut sorted = ranks.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(CliError::invalid("--target-set", "ranks must be distinct"));
            }
            if let Some(&r) = sorted.iter().find(|&&r| r >= graph.vertex_count()) {
                return Err(CliError::invalid(
                    "--target-set",
                    format!(
                        "rank {r} out of range for {} vertices",
                        graph.vertex_count()
                    ),
                ));
            }
            TargetSpec::Explicit(ranks.into_iter().map(VertexId).collect())
        }
        (None, None) => {
            return Err(CliError::invalid(
                "--targets",
                "give --targets M or --target-set r1,r2,...",
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects --targets with --target-set"),
    };
    let t_max = check_steps(raw.steps)?.unwrap_or_else(|| default_t_max(graph, loop_weight));
    Ok(TraceSpec {
        graph,
        coin,
        loop_weight,
        targets,
        t_max,
        peak,
        out: raw.out,
    })
}

fn validate_sweep(raw: RawSweep) -> Result<SweepSpec, CliError> {
    let graph = parse_graph(&raw.graph)?;
    let coins = raw
        .coin
        .split(',')
        .map(|c| c.trim().parse::<CoinKind>())
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(&c) = coins.iter().find(|c| !c.is_lackadaisical()) {
        return Err(CliError::invalid(
            "--coin",
            format!("sweeps need g or l, got {c}"),
        ));
    }
    check_count("--targets", graph, raw.targets)?;
    let grid = match (raw.grid, raw.loops) {
        (_, Some(list)) => {
            let grid: Vec<f64> = parse_list("--loops", &list)?;
            if grid.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                return Err(CliError::invalid(
                    "--loops",
                    "weights must be finite and > 0",
                ));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::invalid(
                    "--loops",
                    "weights must be strictly increasing",
                ));
            }
            grid
        }
        (Some(spec), None) => {
            let parts: Vec<&str> = spec.split(',').collect();
            let [lo, hi, count] = parts[..] else {
                return Err(CliError::invalid(
                    "--grid",
                    format!("expected 'lo,hi,count', got '{spec}'"),
                ));
            };
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::invalid("--grid", format!("cannot parse '{s}'")))
            };
            let count = count.trim().parse::<usize>().map_err(|_| {
                CliError::invalid("--grid", format!("cannot parse count '{count}'"))
            })?;
            geometric_grid(num(lo)?, num(hi)?, count)
                .map_err(|e| CliError::invalid("--grid", e.to_string()))?
        }
        (None, None) => {
            let (lo, hi, count) = DEFAULT_GRID;
            geometric_grid(lo, hi, count)?
        }
    };
    Ok(SweepSpec {
        graph,
        coins,
        target_count: raw.targets,
        grid,
        t_max: check_steps(raw.steps)?,
        peak: raw.peak.parse()?,
        out: raw.out,
    })
}

fn validate_preset(raw: RawPreset) -> Result<PresetSpec, CliError> {
    let action = if raw.list {
        PresetAction::List
    } else if raw.variants {
        PresetAction::ListVariants
    } else if raw.all {
        PresetAction::Run(
            figure_presets()
                .iter()
                .map(|p| p.name().to_string())
                .collect(),
        )
    } else if raw.names.is_empty() {
        return Err(CliError::invalid(
            "preset",
            "give preset names, --all, --list or --variants",
        ));
    } else {
        for name in &raw.names {
            find_preset(name)?;
        }
        PresetAction::Run(raw.names)
    };
    Ok(PresetSpec {
        action,
        out_dir: raw.out_dir,
        t_max: check_steps(raw.steps)?,
        peak: raw.peak.parse()?,
    })
}

fn validate_verify(raw: RawVerify) -> Result<VerifySpec, CliError> {
    let none = !(raw.oracle || raw.unitarity || raw.grover_law);
    if raw.steps == 0 {
        return Err(CliError::invalid(
            "--steps",
            "step count must be at least 1",
        ));
    }
    Ok(VerifySpec {
        oracle: raw.oracle || none,
        unitarity: raw.unitarity || none,
        grover_law: raw.grover_law || none,
        steps: raw.steps,
        report: raw.report,
    })
}

/// Parses and validates a full argument vector (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<RunSpec, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let raw = RawCli::try_parse_from(argv)?;
    Ok(match raw.command {
        RawCommand::Trace(t) => RunSpec::Trace(validate_trace(t)?),
        RawCommand::Sweep(s) => RunSpec::Sweep(validate_sweep(s)?),
        RawCommand::Preset(p) => RunSpec::Preset(validate_preset(p)?),
        RawCommand::Verify(v) => RunSpec::Verify(validate_verify(v)?),
    })
}

/// Reads `JWALK_THREADS`; `None` when unset.
pub fn thread_cap(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Threads(v.to_string())),
        },
    }
}

/// Reals are written with 12 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.11e}")
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn check_traces(traces: &[ProbabilityTrace]) -> Result<(), CliError> {
    let Some(first) = traces.first() else {
        return Err(CliError::invalid("traces", "nothing to emit"));
    };
    if traces
        .iter()
        .any(|t| t.probabilities.len() != first.probabilities.len())
    {
        return Err(CliError::invalid("traces", "traces differ in length"));
    }
    Ok(())
}

/// CSV with a `step` column and one `p_M<count>` column per trace.
pub fn render_trace_csv(traces: &[ProbabilityTrace]) -> Result<String, CliError> {
    check_traces(traces)?;
    let mut out = String::from("step");
    for t in traces {
        write!(out, ",p_M{}", t.target_count()).unwrap();
    }
    out.push('\n');
    for step in 0..traces[0].probabilities.len() {
        write!(out, "{step}").unwrap();
        for t in traces {
            write!(out, ",{}", format_real(t.probabilities[step])).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// The self-describing metadata written next to a trace CSV.
pub fn trace_sidecar(traces: &[ProbabilityTrace]) -> Result<Value, CliError> {
    check_traces(traces)?;
    let first = &traces[0];
    let targets: Vec<Vec<usize>> = traces
        .iter()
        .map(|t| t.targets.iter().map(|v| v.rank()).collect())
        .collect();
    let t_peak: Vec<Option<usize>> = traces.iter().map(|t| t.peak.map(|p| p.step)).collect();
    let p_peak: Vec<Option<f64>> = traces
        .iter()
        .map(|t| t.peak.map(|p| p.probability))
        .collect();
    Ok(json!({
        "graph_n": first.spec.n(),
        "graph_k": first.spec.k(),
        "N": first.spec.vertex_count(),
        "d": first.spec.degree(),
        "coin": first.coin.short_name(),
        "l": first.loop_weight,
        "targets": targets,
        "t_max": first.t_max(),
        "peak_rule": first.rule.name(),
        "t_peak": t_peak,
        "p_peak": p_peak,
    }))
}

/// Writes the trace CSV and its sidecar JSON.
pub fn emit_trace_csv(traces: &[ProbabilityTrace], path: &Path) -> Result<(), CliError> {
    let csv = render_trace_csv(traces)?;
    let sidecar = trace_sidecar(traces)?;
    write_file(path, &csv)?;
    write_file(
        &sidecar_path(path),
        &(serde_json::to_string_pretty(&sidecar).expect("json") + "\n"),
    )
}

/// CSV with an `l` column followed by the requested quantities per coin.
/// Grid points without a peak leave their cells empty.
pub fn render_sweep_csv(
    sweeps: &[SweepResult],
    quantities: &[SweepQuantity],
) -> Result<String, CliError> {
    let Some(first) = sweeps.first() else {
        return Err(CliError::invalid("sweep", "nothing to emit"));
    };
    let mut out = String::from("l");
    for s in sweeps {
        for q in quantities {
            let col = match q {
                SweepQuantity::SuccessProbability => "p_peak",
                SweepQuantity::RunningTime => "t_peak",
            };
            write!(out, ",{col}_{}", s.coin.short_name()).unwrap();
        }
    }
    out.push('\n');
    for (i, record) in first.records.iter().enumerate() {
        out.push_str(&format_real(record.loop_weight));
        for s in sweeps {
            let peak = s.records[i].peak;
            for q in quantities {
                out.push(',');
                match (q, peak) {
                    (SweepQuantity::SuccessProbability, Some(p)) => {
                        out.push_str(&format_real(p.probability))
                    }
                    (SweepQuantity::RunningTime, Some(p)) => write!(out, "{}", p.step).unwrap(),
                    (_, None) => {}
                }
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn sweep_sidecar(sweeps: &[SweepResult], fixed_t_max: Option<usize>) -> Value {
    let first = &sweeps[0];
    let coins: Vec<&str> = sweeps.iter().map(|s| s.coin.short_name()).collect();
    let grid: Vec<f64> = first.records.iter().map(|r| r.loop_weight).collect();
    let t_max: Vec<usize> = first.records.iter().map(|r| r.t_max).collect();
    let no_peak: Vec<Vec<f64>> = sweeps
        .iter()
        .map(|s| {
            s.records
                .iter()
                .filter(|r| r.peak.is_none())
                .map(|r| r.loop_weight)
                .collect()
        })
        .collect();
    json!({
        "graph_n": first.spec.n(),
        "graph_k": first.spec.k(),
        "N": first.spec.vertex_count(),
        "d": first.spec.degree(),
        "coin": coins,
        "l": grid,
        "targets": (0..first.target_count).collect::<Vec<_>>(),
        "t_max": fixed_t_max.map_or_else(|| json!(t_max), |t| json!(t)),
        "peak_rule": first.rule.name(),
        "no_peak": no_peak,
    })
}

fn emit_sweep(
    sweeps: &[SweepResult],
    quantities: &[SweepQuantity],
    fixed_t_max: Option<usize>,
    path: &Path,
) -> Result<(), CliError> {
    let csv = render_sweep_csv(sweeps, quantities)?;
    write_file(path, &csv)?;
    let sidecar = sweep_sidecar(sweeps, fixed_t_max);
    write_file(
        &sidecar_path(path),
        &(serde_json::to_string_pretty(&sidecar).expect("json") + "\n"),
    )
}

fn peak_summary(t: &ProbabilityTrace) -> String {
    match t.peak {
        Some(p) => format!(
            "M={} t_peak={} p_peak={:.6}",
            t.target_count(),
            p.step,
            p.probability
        ),
        None => format!("M={} no peak", t.target_count()),
    }
}

fn run_trace(spec: &TraceSpec, out: &mut dyn io::Write) -> Result<(), CliError> {
    let traces = spec
        .targets
        .columns()
        .into_iter()
        .map(|targets| {
            let cfg =
                WalkConfig::new(spec.graph, spec.coin, spec.loop_weight, targets, spec.t_max)?;
            Ok(ProbabilityTrace::run(cfg, spec.peak)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    match &spec.out {
        Some(path) => {
            emit_trace_csv(&traces, path)?;
            for t in &traces {
                writeln!(out, "{}", peak_summary(t)).map_err(stdout_error)?;
            }
            writeln!(
                out,
                "wrote {} and {}",
                path.display(),
                sidecar_path(path).display()
            )
            .map_err(stdout_error)?;
        }
        None => out
            .write_all(render_trace_csv(&traces)?.as_bytes())
            .map_err(stdout_error)?,
    }
    Ok(())
}

fn run_sweep(spec: &SweepSpec, out: &mut dyn io::Write) -> Result<(), CliError> {
    let sweeps = spec
        .coins
        .iter()
        .map(|&coin| {
            sweep_loop_weight(
                spec.graph,
                coin,
                spec.target_count,
                &spec.grid,
                spec.t_max,
                spec.peak,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let both = [
        SweepQuantity::SuccessProbability,
        SweepQuantity::RunningTime,
    ];
    match &spec.out {
        Some(path) => {
            emit_sweep(&sweeps, &both, spec.t_max, path)?;
            writeln!(
                out,
                "wrote {} and {}",
                path.display(),
                sidecar_path(path).display()
            )
            .map_err(stdout_error)?;
        }
        None => out
            .write_all(render_sweep_csv(&sweeps, &both)?.as_bytes())
            .map_err(stdout_error)?,
    }
    Ok(())
}

fn run_presets(spec: &PresetSpec, out: &mut dyn io::Write) -> Result<(), CliError> {
    let names = match &spec.action {
        PresetAction::List | PresetAction::ListVariants => {
            let presets = if spec.action == PresetAction::List {
                figure_presets()
            } else {
                variant_presets()
            };
            for p in presets {
                writeln!(out, "{:<16} {}", p.name(), p.describe()).map_err(stdout_error)?;
            }
            return Ok(());
        }
        PresetAction::Run(names) => names,
    };
    fs::create_dir_all(&spec.out_dir).map_err(|source| CliError::Io {
        path: spec.out_dir.clone(),
        source,
    })?;
    for name in names {
        let path = spec.out_dir.join(format!("{name}.csv"));
        match find_preset(name)? {
            Preset::Panel(mut panel) => {
                if spec.t_max.is_some() {
                    panel.t_max = spec.t_max;
                }
                let traces = run_scenario(&panel, spec.peak)?;
                emit_trace_csv(&traces, &path)?;
                let peaks: Vec<String> = traces.iter().map(peak_summary).collect();
                writeln!(out, "{name}: {}", peaks.join("; ")).map_err(stdout_error)?;
            }
            Preset::Sweep(mut sweep) => {
                if spec.t_max.is_some() {
                    sweep.t_max = spec.t_max;
                }
                let results = run_sweep_preset(&sweep, spec.peak)?;
                emit_sweep(&results, &[sweep.quantity], sweep.t_max, &path)?;
                writeln!(out, "{name}: {} grid points", sweep.grid.len()).map_err(stdout_error)?;
            }
        }
    }
    Ok(())
}

fn run_verify(spec: &VerifySpec, out: &mut dyn io::Write) -> Result<VerifyReport, CliError> {
    let mut report = VerifyReport::default();
    if spec.oracle {
        verify::run_oracle_checks(&mut report, 50)?;
    }
    if spec.unitarity {
        let j13_3 = GraphSpec::new(13, 3)?;
        verify::run_unitarity_checks(&mut report, j13_3, spec.steps)?;
    }
    if spec.grover_law {
        verify::run_grover_law_checks(&mut report, &verify::GROVER_LAW_GRAPHS)?;
    }
    out.write_all(report.render_text().as_bytes())
        .map_err(stdout_error)?;
    if let Some(path) = &spec.report {
        let json = serde_json::to_string_pretty(&json!({
            "passed": report.passed(),
            "checks": report.checks,
        }))
        .expect("json");
        write_file(path, &(json + "\n"))?;
    }
    Ok(report)
}

fn stdout_error(source: io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

/// Executes a validated command, writing human-readable output to `out`.
pub fn execute(spec: &RunSpec, out: &mut dyn io::Write) -> Result<(), CliError> {
    match spec {
        RunSpec::Trace(t) => run_trace(t, out),
        RunSpec::Sweep(s) => run_sweep(s, out),
        RunSpec::Preset(p) => run_presets(p, out),
        RunSpec::Verify(v) => {
            let report = run_verify(v, out)?;
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::VerificationFailed(failed));
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(line: &str) -> Result<RunSpec, CliError> {
        parse_args(std::iter::once("jwalk").chain(line.split_whitespace()))
    }

    #[test]
    fn trace_fig5_row1() {
        let RunSpec::Trace(t) =
            parse("trace --graph 13,3 --coin g --loop 1.0 --targets 3 --steps 400").unwrap()
        else {
            panic!("expected trace");
        };
        assert_eq!((t.graph.n(), t.graph.k()), (13, 3));
        assert_eq!(t.coin, CoinKind::Cg);
        assert_eq!(t.loop_weight, 1.0);
        assert_eq!(t.targets, TargetSpec::Prefix(vec![3]));
        assert_eq!(t.t_max, 400);
        assert_eq!(t.peak, PeakRule::FirstLocalMax);
    }

    #[test]
    fn trace_without_loop_for_grover() {
        let RunSpec::Trace(t) = parse("trace --graph 4,2 --coin grov --targets 1").unwrap() else {
            panic!("expected trace");
        };
        assert_eq!(t.loop_weight, 0.0);
        assert_eq!(t.t_max, default_t_max(t.graph, 0.0));
    }

    #[test]
    fn validation_errors_are_distinct() {
        assert!(matches!(
            parse("trace --graph 4,2 --coin skw --loop 1 --targets 1"),
            Err(CliError::LoopWithStandardCoin(CoinKind::Cskw))
        ));
        assert!(matches!(
            parse("trace --graph 4,2 --coin hadamard --targets 1"),
            Err(CliError::UnknownCoin(_))
        ));
        assert!(matches!(
            parse("trace --graph 4,2 --coin g --targets 1"),
            Err(CliError::MissingLoop(CoinKind::Cg))
        ));
        assert!(matches!(
            parse("trace --graph 4,2 --coin l --loop 0 --targets 1"),
            Err(CliError::NonPositiveLoop(_))
        ));
        assert!(matches!(
            parse("trace --graph 4,2 --coin grov --targets 7"),
            Err(CliError::TooManyTargets { count: 7, .. })
        ));
        assert!(matches!(
            parse("trace --graph 4,3 --coin grov --targets 1"),
            Err(CliError::Graph(GraphError::InvalidGraph { .. }))
        ));
        assert!(matches!(
            parse("trace --graph 4 --coin grov --targets 1"),
            Err(CliError::InvalidValue {
                flag: "--graph",
                ..
            })
        ));
        assert!(matches!(
            parse("trace --graph 4,2 --coin grov --target-set 1,1"),
            Err(CliError::InvalidValue {
                flag: "--target-set",
                ..
            })
        ));
        assert!(matches!(
            parse("trace --graph 4,2 --coin grov --target-set 9"),
            Err(CliError::InvalidValue {
                flag: "--target-set",
                ..
            })
        ));
        assert!(matches!(
            parse("trace --graph 4,2 --coin grov --targets 1 --peak best"),
            Err(CliError::UnknownPeakRule(_))
        ));
        assert!(matches!(
            parse("trace --graph 4,2 --coin grov --targets 1 --steps 0"),
            Err(CliError::InvalidValue {
                flag: "--steps",
                ..
            })
        ));
        assert!(matches!(
            parse("trace --graph 4,2 --coin grov"),
            Err(CliError::InvalidValue { .. })
        ));
        assert!(matches!(parse("launch"), Err(CliError::Clap(_))));
        assert!(matches!(
            parse("sweep --graph 10,3 --coin skw"),
            Err(CliError::InvalidValue { flag: "--coin", .. })
        ));
        assert!(matches!(
            parse("sweep --graph 10,3 --loops 1,0.5"),
            Err(CliError::InvalidValue {
                flag: "--loops",
                ..
            })
        ));
        assert!(matches!(
            parse("preset fig9"),
            Err(CliError::Experiment(ExperimentError::UnknownPreset(_)))
        ));
        for bad in [
            "trace --graph 4,2 --coin skw --loop 1 --targets 1",
            "launch",
        ] {
            assert_eq!(parse(bad).unwrap_err().exit_code(), 1);
        }
        assert_eq!(CliError::VerificationFailed(2).exit_code(), 2);
    }

    #[test]
    fn sweep_defaults() {
        let RunSpec::Sweep(s) = parse("sweep --graph 10,3").unwrap() else {
            panic!("expected sweep");
        };
        assert_eq!(s.coins, vec![CoinKind::Cg, CoinKind::Cl]);
        assert_eq!(s.grid.len(), 50);
        assert_eq!(s.target_count, 1);
        let RunSpec::Sweep(s) = parse("sweep --graph 10,3 --coin g --grid 0.1,10,3").unwrap()
        else {
            panic!("expected sweep");
        };
        assert_eq!(s.grid.len(), 3);
        assert!((s.grid[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn verify_defaults_to_everything() {
        let RunSpec::Verify(v) = parse("verify").unwrap() else {
            panic!("expected verify");
        };
        assert!(v.oracle && v.unitarity && v.grover_law);
        let RunSpec::Verify(v) = parse("verify --unitarity --steps 1000").unwrap() else {
            panic!("expected verify");
        };
        assert!(!v.oracle && v.unitarity && !v.grover_law);
        assert_eq!(v.steps, 1000);
    }

    #[test]
    fn thread_cap_parsing() {
        assert_eq!(thread_cap(None).unwrap(), None);
        assert_eq!(thread_cap(Some("4")).unwrap(), Some(4));
        assert!(thread_cap(Some("0")).is_err());
        assert!(thread_cap(Some("many")).is_err());
    }

    #[test]
    fn real_format_has_twelve_significant_digits() {
        assert_eq!(format_real(0.5), "5.00000000000e-1");
        assert_eq!(format_real(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(format_real(0.0), "0.00000000000e0");
    }

    #[test]
    fn single_trace_csv_shape() {
        let spec = GraphSpec::new(5, 2).unwrap();
        let cfg = WalkConfig::with_prefix_targets(spec, CoinKind::Cgrov, 0.0, 1, 20).unwrap();
        let trace = ProbabilityTrace::run(cfg, PeakRule::FirstLocalMax).unwrap();
        let csv = render_trace_csv(&[trace]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 22);
        assert_eq!(lines[0], "step,p_M1");
        assert!(lines[1].starts_with("0,1.00000000000e-1"));
        assert!(!csv.contains('\r'));
        assert!(render_trace_csv(&[]).is_err());
    }
}
