//! Probability traces, peak detection, self-loop sweeps and the figure presets.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc as Shared;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{CoinKind, EngineError, Walk, WalkConfig};
use crate::graph::{ArcTable, GraphError, GraphSpec, VertexId};

/// A local maximum must beat the initial probability by this much.
pub const PEAK_FLOOR: f64 = 0.01;

/// Half-width of the neighborhood a first local maximum must dominate. The
/// flip-flop walk carries a period-2 ripple on top of the search signal, so a
/// plain nearest-neighbor test fires on the ripple after two steps.
pub const PEAK_NEIGHBORHOOD: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("trace has {0} points, peak detection needs at least 2")]
    TraceTooShort(usize),
    #[error("invalid self-loop grid: {0}")]
    InvalidGrid(String),
    #[error("self-loop sweeps need a lackadaisical coin (g or l), got {0}")]
    SweepCoin(CoinKind),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
}

impl From<GraphError> for ExperimentError {
    fn from(e: GraphError) -> Self {
        ExperimentError::Engine(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub enum PeakRule {
    /// Earliest step that dominates its `PEAK_NEIGHBORHOOD` on both sides and
    /// clears `p(0) + PEAK_FLOOR`.
    #[default]
    FirstLocalMax,
    /// Argmax over the whole window, earliest on ties.
    GlobalMax,
}

impl PeakRule {
    pub fn name(self) -> &'static str {
        match self {
            PeakRule::FirstLocalMax => "first",
            PeakRule::GlobalMax => "global",
        }
    }
}

impl fmt::Display for PeakRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown peak rule '{0}' (expected first or global)")]
pub struct UnknownPeakRule(pub String);

impl FromStr for PeakRule {
    type Err = UnknownPeakRule;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" | "first-local-max" => Ok(PeakRule::FirstLocalMax),
            "global" | "global-max" => Ok(PeakRule::GlobalMax),
            _ => Err(UnknownPeakRule(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub step: usize,
    pub probability: f64,
}

/// Locates the peak of a success-probability trace. `Ok(None)` means the
/// rule found no peak (e.g. a monotone trace under `FirstLocalMax`).
pub fn find_peak(trace: &[f64], rule: PeakRule) -> Result<Option<Peak>, ExperimentError> {
    if trace.len() < 2 {
        return Err(ExperimentError::TraceTooShort(trace.len()));
    }
    let peak = match rule {
        PeakRule::GlobalMax => {
            let mut best = 0;
            for (t, &p) in trace.iter().enumerate() {
                if p > trace[best] {
                    best = t;
                }
            }
            Some(best)
        }
        PeakRule::FirstLocalMax => {
            let last = trace.len() - 1;
            let floor = trace[0] + PEAK_FLOOR;
            (1..last).find(|&t| {
                let p = trace[t];
                let before = &trace[t.saturating_sub(PEAK_NEIGHBORHOOD)..t];
                let after = &trace[t + 1..=(t + PEAK_NEIGHBORHOOD).min(last)];
                p > floor && before.iter().all(|&q| p > q) && after.iter().all(|&q| p >= q)
            })
        }
    };
    Ok(peak.map(|step| Peak {
        step,
        probability: trace[step],
    }))
}

/// `10 * ceil(pi * sqrt(N (d + l)) / 2)`.
pub fn default_t_max(spec: GraphSpec, loop_weight: f64) -> usize {
    let arcs = spec.vertex_count() as f64 * (spec.degree() as f64 + loop_weight);
    10 * (PI * arcs.sqrt() / 2.0).ceil() as usize
}

/// `pi sqrt(N) / (2 sqrt 2)`, the single-target optimal time of the Grover coin.
pub fn grover_optimal_time(spec: GraphSpec) -> f64 {
    PI * (spec.vertex_count() as f64).sqrt() / (2.0 * 2f64.sqrt())
}

/// One walk's success probability over `t = 0..=t_max` and its peak.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTrace {
    pub spec: GraphSpec,
    pub coin: CoinKind,
    pub loop_weight: f64,
    pub targets: Vec<VertexId>,
    pub rule: PeakRule,
    pub probabilities: Vec<f64>,
    pub peak: Option<Peak>,
}

impl ProbabilityTrace {
    pub fn run(cfg: WalkConfig, rule: PeakRule) -> Result<Self, ExperimentError> {
        let table = Shared::new(ArcTable::build(cfg.spec())?);
        Self::run_with_table(cfg, table, rule)
    }

    pub fn run_with_table(
        cfg: WalkConfig,
        table: Shared<ArcTable>,
        rule: PeakRule,
    ) -> Result<Self, ExperimentError> {
        let walk = Walk::with_table(cfg, table);
        let probabilities = walk.trace();
        let peak = find_peak(&probabilities, rule)?;
        let cfg = walk.config();
        Ok(Self {
            spec: cfg.spec(),
            coin: cfg.coin(),
            loop_weight: cfg.loop_weight(),
            targets: cfg.targets().to_vec(),
            rule,
            probabilities,
            peak,
        })
    }

    pub fn target_count(&self) -> usize {
        self.targets.len()
    }

    pub fn t_max(&self) -> usize {
        self.probabilities.len() - 1
    }
}

/// `count` geometrically spaced weights from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>, ExperimentError> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
        return Err(ExperimentError::InvalidGrid(format!(
            "need 0 < lo < hi, got lo = {lo}, hi = {hi}"
        )));
    }
    match count {
        0 => Err(ExperimentError::InvalidGrid(
            "grid needs at least one point".into(),
        )),
        1 => Ok(vec![lo]),
        _ => {
            let ratio = (hi / lo).ln() / (count - 1) as f64;
            let mut grid: Vec<f64> = (0..count).map(|i| lo * (ratio * i as f64).exp()).collect();
            grid[count - 1] = hi;
            Ok(grid)
        }
    }
}

pub const DEFAULT_GRID: (f64, f64, usize) = (0.01, 100.0, 50);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    pub loop_weight: f64,
    pub t_max: usize,
    /// `None` flags a grid point where the rule found no peak.
    pub peak: Option<Peak>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub spec: GraphSpec,
    pub coin: CoinKind,
    pub target_count: usize,
    pub rule: PeakRule,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn max_probability(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(|r| r.peak.map(|p| p.probability))
            .reduce(f64::max)
    }
}

/// One trace and peak per grid point. `t_max = None` uses [`default_t_max`]
/// at each weight.
pub fn sweep_loop_weight(
    spec: GraphSpec,
    coin: CoinKind,
    target_count: usize,
    grid: &[f64],
    t_max: Option<usize>,
    rule: PeakRule,
) -> Result<SweepResult, ExperimentError> {
    if !coin.is_lackadaisical() {
        return Err(ExperimentError::SweepCoin(coin));
    }
    if grid.is_empty() {
        return Err(ExperimentError::InvalidGrid("grid is empty".into()));
    }
    if grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(ExperimentError::InvalidGrid(
            "weights must be finite and >= 0".into(),
        ));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::InvalidGrid(
            "weights must be strictly increasing".into(),
        ));
    }
    let table = Shared::new(ArcTable::build(spec)?);
    let records = grid
        .par_iter()
        .map(|&l| {
            let steps = t_max.unwrap_or_else(|| default_t_max(spec, l));
            let cfg = WalkConfig::with_prefix_targets(spec, coin, l, target_count, steps)?;
            let trace = ProbabilityTrace::run_with_table(cfg, table.clone(), rule)?;
            Ok(SweepRecord {
                loop_weight: l,
                t_max: steps,
                peak: trace.peak,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(SweepResult {
        spec,
        coin,
        target_count,
        rule,
        records,
    })
}

/// One panel of the multi-target figures: a graph, a coin and a list of
/// target counts, each run with the prefix target rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPreset {
    pub name: String,
    pub spec: GraphSpec,
    pub coin: CoinKind,
    pub loop_weight: f64,
    pub target_counts: Vec<usize>,
    /// `None` means [`default_t_max`].
    pub t_max: Option<usize>,
    pub note: Option<&'static str>,
}

impl ScenarioPreset {
    pub fn resolved_t_max(&self) -> usize {
        self.t_max
            .unwrap_or_else(|| default_t_max(self.spec, self.loop_weight))
    }
}

/// Which sweep quantity a self-loop panel plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepQuantity {
    SuccessProbability,
    RunningTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPreset {
    pub name: String,
    pub spec: GraphSpec,
    pub coins: Vec<CoinKind>,
    pub target_count: usize,
    pub grid: Vec<f64>,
    pub t_max: Option<usize>,
    pub quantity: SweepQuantity,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Panel(ScenarioPreset),
    Sweep(SweepPreset),
}

impl Preset {
    pub fn name(&self) -> &str {
        match self {
            Preset::Panel(p) => &p.name,
            Preset::Sweep(s) => &s.name,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Preset::Panel(p) => {
                let loop_part = if p.coin.is_lackadaisical() {
                    format!(" l={}", p.loop_weight)
                } else {
                    String::new()
                };
                let mut line = format!(
                    "{} coin={}{} M={:?} t_max={}",
                    p.spec,
                    p.coin,
                    loop_part,
                    p.target_counts,
                    p.resolved_t_max()
                );
                if let Some(note) = p.note {
                    line.push_str(&format!(" ({note})"));
                }
                line
            }
            Preset::Sweep(s) => {
                let coins: Vec<_> = s.coins.iter().map(|c| c.short_name()).collect();
                let what = match s.quantity {
                    SweepQuantity::SuccessProbability => "success probability",
                    SweepQuantity::RunningTime => "running time",
                };
                format!(
                    "{} coins={} M={} {} vs l over {} points in [{}, {}]",
                    s.spec,
                    coins.join(","),
                    s.target_count,
                    what,
                    s.grid.len(),
                    s.grid.first().copied().unwrap_or_default(),
                    s.grid.last().copied().unwrap_or_default()
                )
            }
        }
    }
}

const FIGURE_TARGET_COUNTS: [usize; 3] = [1, 3, 6];

fn panel(name: String, n: usize, k: usize, coin: CoinKind, l: f64) -> Preset {
    Preset::Panel(ScenarioPreset {
        name,
        spec: GraphSpec::new(n, k).expect("preset graphs are valid"),
        coin,
        loop_weight: l,
        target_counts: FIGURE_TARGET_COUNTS.to_vec(),
        t_max: None,
        note: None,
    })
}

/// Every figure panel: fig2a, fig2b, fig3a-d, fig4a-d and fig5-row{1..4}-col{1..4}.
pub fn figure_presets() -> Vec<Preset> {
    let (lo, hi, count) = DEFAULT_GRID;
    let grid = geometric_grid(lo, hi, count).expect("default grid is valid");
    let j10_3 = GraphSpec::new(10, 3).expect("valid");
    let mut out = vec![
        Preset::Sweep(SweepPreset {
            name: "fig2a".into(),
            spec: j10_3,
            coins: vec![CoinKind::Cg, CoinKind::Cl],
            target_count: 1,
            grid: grid.clone(),
            t_max: None,
            quantity: SweepQuantity::SuccessProbability,
        }),
        Preset::Sweep(SweepPreset {
            name: "fig2b".into(),
            spec: j10_3,
            coins: vec![CoinKind::Cg, CoinKind::Cl],
            target_count: 1,
            grid,
            t_max: None,
            quantity: SweepQuantity::RunningTime,
        }),
    ];
    let columns = |g_loop: f64, l_loop: f64| {
        [
            (CoinKind::Cg, g_loop),
            (CoinKind::Cgrov, 0.0),
            (CoinKind::Cl, l_loop),
            (CoinKind::Cskw, 0.0),
        ]
    };
    for (letter, (coin, l)) in ['a', 'b', 'c', 'd'].into_iter().zip(columns(10.0, 1.0)) {
        out.push(panel(format!("fig3{letter}"), 300, 1, coin, l));
    }
    for (letter, (coin, l)) in ['a', 'b', 'c', 'd'].into_iter().zip(columns(1.0, 0.1)) {
        out.push(panel(format!("fig4{letter}"), 25, 2, coin, l));
    }
    for (row, k) in (3..=6).enumerate() {
        for (col, (coin, l)) in columns(1.0, 0.1).into_iter().enumerate() {
            out.push(panel(
                format!("fig5-row{}-col{}", row + 1, col + 1),
                13,
                k,
                coin,
                l,
            ));
        }
    }
    out
}

/// The C_l column of the J(13, k) figure with l = 1 instead of the 0.1 used
/// for the plotted curves.
pub fn variant_presets() -> Vec<Preset> {
    (3..=6)
        .enumerate()
        .map(|(row, k)| {
            let mut p = panel(
                format!("fig5-row{}-col3-l1", row + 1),
                13,
                k,
                CoinKind::Cl,
                1.0,
            );
            if let Preset::Panel(ref mut s) = p {
                s.note = Some("variant: self-loop weight 1 instead of 0.1");
            }
            p
        })
        .collect()
}

pub fn find_preset(name: &str) -> Result<Preset, ExperimentError> {
    figure_presets()
        .into_iter()
        .chain(variant_presets())
        .find(|p| p.name() == name)
        .ok_or_else(|| ExperimentError::UnknownPreset(name.to_string()))
}

/// One trace per target count, in the preset's order.
pub fn run_scenario(
    preset: &ScenarioPreset,
    rule: PeakRule,
) -> Result<Vec<ProbabilityTrace>, ExperimentError> {
    let table = Shared::new(ArcTable::build(preset.spec)?);
    let t_max = preset.resolved_t_max();
    preset
        .target_counts
        .par_iter()
        .map(|&m| {
            let cfg = WalkConfig::with_prefix_targets(
                preset.spec,
                preset.coin,
                preset.loop_weight,
                m,
                t_max,
            )?;
            ProbabilityTrace::run_with_table(cfg, table.clone(), rule)
        })
        .collect()
}

/// Runs every coin of a sweep preset.
pub fn run_sweep_preset(
    preset: &SweepPreset,
    rule: PeakRule,
) -> Result<Vec<SweepResult>, ExperimentError> {
    preset
        .coins
        .iter()
        .map(|&coin| {
            sweep_loop_weight(
                preset.spec,
                coin,
                preset.target_count,
                &preset.grid,
                preset.t_max,
                rule,
            )
        })
        .collect()
}
