//! Self-checks behind `jwalk verify`: a dense-matrix oracle for small graphs,
//! norm drift over long runs, and the Grover-coin single-target law.
//!
//! The dense oracle does not share code with the engine's fast path. It
//! enumerates vertices with `itertools`, finds neighbors by subset
//! intersection, and builds the coin and shift matrices column by column
//! from their action on basis states.

use std::sync::Arc as Shared;

use itertools::Itertools;
use num_complex::Complex64;
use serde::Serialize;

use crate::engine::{CoinKind, EngineError, StateVector, Walk, WalkConfig};
use crate::experiments::{find_peak, grover_optimal_time, ExperimentError, PeakRule};
use crate::graph::{ArcTable, GraphSpec, VertexId};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl DenseMatrix {
    fn from_columns(columns: Vec<Vec<Complex64>>) -> Self {
        let dim = columns.len();
        let mut entries = vec![ZERO; dim * dim];
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), dim);
            for (i, &x) in col.iter().enumerate() {
                entries[i * dim + j] = x;
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.entries
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        let n = self.dim;
        let mut entries = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    entries[i * n + j] += a * rhs.entries[k * n + j];
                }
            }
        }
        DenseMatrix { dim: n, entries }
    }

    /// `max |(A^dagger A - I)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dot: Complex64 = (0..n).map(|r| self.get(r, i).conj() * self.get(r, j)).sum();
                let expected = if i == j { ONE } else { ZERO };
                worst = worst.max((dot - expected).norm());
            }
        }
        worst
    }
}

/// Coin, shift and initial state of a small walk as explicit matrices.
#[derive(Debug, Clone)]
pub struct DenseWalk {
    pub coin: DenseMatrix,
    pub shift: DenseMatrix,
    pub evolution: DenseMatrix,
    pub initial: Vec<Complex64>,
    slots: usize,
    targets: Vec<usize>,
}

impl DenseWalk {
    pub fn build(n: usize, k: usize, coin: CoinKind, loop_weight: f64, targets: &[usize]) -> Self {
        let vertices: Vec<Vec<usize>> = (1..=n).combinations(k).collect();
        let count = vertices.len();
        let adjacency: Vec<Vec<usize>> = vertices
            .iter()
            .map(|a| {
                vertices
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| a.iter().filter(|x| b.contains(x)).count() + 1 == k)
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        let degree = adjacency[0].len();
        let lazy = coin.is_lackadaisical();
        let slots = degree + usize::from(lazy);
        let dim = count * slots;

        // |psi_edg>: 1/sqrt(d + l) on edges and sqrt(l)/sqrt(d + l) on the loop
        let denom = if lazy {
            degree as f64 + loop_weight
        } else {
            degree as f64
        };
        let edg: Vec<f64> = (0..slots)
            .map(|s| {
                if s < degree {
                    1.0 / denom.sqrt()
                } else {
                    loop_weight.sqrt() / denom.sqrt()
                }
            })
            .collect();

        let marked = |v: usize| targets.contains(&v);
        let coin_columns = (0..dim)
            .map(|j| {
                let (v, s) = (j / slots, j % slots);
                let mut col = vec![ZERO; dim];
                // C|v,s> = 2 |psi_edg> <psi_edg|s> - |s>, inside block v
                let grover = |col: &mut Vec<Complex64>, sign: f64| {
                    for r in 0..slots {
                        let mut x = 2.0 * edg[r] * edg[s];
                        if r == s {
                            x -= 1.0;
                        }
                        col[v * slots + r] = Complex64::new(sign * x, 0.0);
                    }
                };
                match (coin, marked(v)) {
                    (_, false) => grover(&mut col, 1.0),
                    (CoinKind::Cg, true) => grover(&mut col, if s == degree { -1.0 } else { 1.0 }),
                    (CoinKind::Cl | CoinKind::Cgrov, true) => grover(&mut col, -1.0),
                    (CoinKind::Cskw, true) => col[j] = -ONE,
                }
                col
            })
            .collect();

        let shift_columns = (0..dim)
            .map(|j| {
                let (v, s) = (j / slots, j % slots);
                let mut col = vec![ZERO; dim];
                if s == degree {
                    col[j] = ONE;
                } else {
                    let u = adjacency[v][s];
                    let back = adjacency[u].iter().position(|&x| x == v).unwrap();
                    col[u * slots + back] = ONE;
                }
                col
            })
            .collect();

        let coin = DenseMatrix::from_columns(coin_columns);
        let shift = DenseMatrix::from_columns(shift_columns);
        let evolution = shift.mul(&coin);
        let scale = 1.0 / (count as f64).sqrt();
        let initial = (0..dim)
            .map(|j| Complex64::new(edg[j % slots] * scale, 0.0))
            .collect();
        Self {
            coin,
            shift,
            evolution,
            initial,
            slots,
            targets: targets.to_vec(),
        }
    }

    pub fn success_probability(&self, state: &[Complex64]) -> f64 {
        self.targets
            .iter()
            .map(|&v| {
                state[v * self.slots..(v + 1) * self.slots]
                    .iter()
                    .map(|a| a.norm_sqr())
                    .sum::<f64>()
            })
            .sum()
    }
}

fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Engine vs dense oracle on one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub graph: (usize, usize),
    pub coin: CoinKind,
    pub loop_weight: f64,
    pub targets: usize,
    pub steps: usize,
    pub initial_error: f64,
    pub coin_error: f64,
    pub shift_error: f64,
    pub evolution_error: f64,
    pub probability_error: f64,
}

impl OracleComparison {
    pub fn max_error(&self) -> f64 {
        [
            self.initial_error,
            self.coin_error,
            self.shift_error,
            self.evolution_error,
            self.probability_error,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn compare_with_oracle(
    n: usize,
    k: usize,
    coin: CoinKind,
    loop_weight: f64,
    target_count: usize,
    steps: usize,
) -> Result<OracleComparison, EngineError> {
    let spec = GraphSpec::new(n, k)?;
    let cfg = WalkConfig::with_prefix_targets(spec, coin, loop_weight, target_count, steps)?;
    let walk = Walk::new(cfg)?;
    let targets: Vec<usize> = (0..target_count).collect();
    let dense = DenseWalk::build(n, k, coin, loop_weight, &targets);

    let state = walk.initial_state();
    let initial_error = max_abs_diff(state.amplitudes(), &dense.initial);

    let mut coined = state.clone();
    walk.apply_coin(&mut coined)?;
    let coin_error = max_abs_diff(coined.amplitudes(), &dense.coin.apply(&dense.initial));

    // a non-uniform probe so the shift check is not fooled by symmetry
    let probe: Vec<Complex64> = (0..dense.initial.len())
        .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
        .collect();
    let mut shifted = StateVector::from_amplitudes(probe.clone(), walk.config().slots_per_vertex());
    walk.apply_shift(&mut shifted)?;
    let shift_error = max_abs_diff(shifted.amplitudes(), &dense.shift.apply(&probe));

    let mut fast = state;
    let mut slow = dense.initial.clone();
    let mut evolution_error: f64 = 0.0;
    let mut probability_error: f64 = 0.0;
    for _ in 0..steps {
        walk.step(&mut fast)?;
        slow = dense.evolution.apply(&slow);
        evolution_error = evolution_error.max(max_abs_diff(fast.amplitudes(), &slow));
        probability_error = probability_error
            .max((walk.success_probability(&fast) - dense.success_probability(&slow)).abs());
    }
    Ok(OracleComparison {
        graph: (n, k),
        coin,
        loop_weight,
        targets: target_count,
        steps,
        initial_error,
        coin_error,
        shift_error,
        evolution_error,
        probability_error,
    })
}

/// Graphs used by the oracle suite.
pub const ORACLE_GRAPHS: [(usize, usize); 3] = [(4, 2), (5, 1), (5, 2)];
pub const ORACLE_TOLERANCE: f64 = 1e-12;
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Every coin on every oracle graph with one and two targets. Lackadaisical
/// coins run at two self-loop weights.
pub fn oracle_suite(steps: usize) -> Result<Vec<OracleComparison>, EngineError> {
    let mut out = Vec::new();
    for &(n, k) in &ORACLE_GRAPHS {
        for coin in CoinKind::ALL {
            let weights: &[f64] = if coin.is_lackadaisical() {
                &[1.0, 0.37]
            } else {
                &[0.0]
            };
            for &l in weights {
                for m in [1, 2] {
                    out.push(compare_with_oracle(n, k, coin, l, m, steps)?);
                }
            }
        }
    }
    Ok(out)
}

/// Largest `| ||U^t psi_in||^2 - 1 |` over `t = 1..=steps`.
pub fn norm_drift(
    cfg: WalkConfig,
    table: Shared<ArcTable>,
    steps: usize,
) -> Result<f64, EngineError> {
    let walk = Walk::with_table(cfg, table);
    let mut state = walk.initial_state();
    let mut worst: f64 = (state.norm_sqr() - 1.0).abs();
    for _ in 0..steps {
        walk.step(&mut state)?;
        worst = worst.max((state.norm_sqr() - 1.0).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct GroverLawResult {
    pub graph: (usize, usize),
    pub vertex_count: usize,
    pub expected_step: f64,
    pub t_peak: Option<usize>,
    pub p_peak: Option<f64>,
}

pub const GROVER_STEP_TOLERANCE: f64 = 2.0;
pub const GROVER_PROBABILITY_RANGE: (f64, f64) = (0.45, 0.55);

impl GroverLawResult {
    pub fn passed(&self) -> bool {
        match (self.t_peak, self.p_peak) {
            (Some(t), Some(p)) => {
                (t as f64 - self.expected_step).abs() <= GROVER_STEP_TOLERANCE
                    && (GROVER_PROBABILITY_RANGE.0..=GROVER_PROBABILITY_RANGE.1).contains(&p)
            }
            _ => false,
        }
    }
}

/// Runs the Grover coin with one target (rank 0) for `t_max` steps and
/// compares the first peak with `pi sqrt(N) / (2 sqrt 2)`.
pub fn grover_law(spec: GraphSpec, t_max: usize) -> Result<GroverLawResult, ExperimentError> {
    let cfg = WalkConfig::new(spec, CoinKind::Cgrov, 0.0, vec![VertexId(0)], t_max)?;
    let trace = Walk::new(cfg)?.trace();
    let peak = find_peak(&trace, PeakRule::FirstLocalMax)?;
    Ok(GroverLawResult {
        graph: (spec.n(), spec.k()),
        vertex_count: spec.vertex_count(),
        expected_step: grover_optimal_time(spec),
        t_peak: peak.map(|p| p.step),
        p_peak: peak.map(|p| p.probability),
    })
}

/// One line of a verification report.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckOutcome {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("[{tag}] {}: {}\n", c.name, c.detail));
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        out.push_str(&format!(
            "{} checks, {} failed\n",
            self.checks.len(),
            failed
        ));
        out
    }
}

/// Oracle equivalence over `steps` steps, recorded one line per configuration.
pub fn run_oracle_checks(report: &mut VerifyReport, steps: usize) -> Result<(), EngineError> {
    for cmp in oracle_suite(steps)? {
        let err = cmp.max_error();
        report.push(
            format!(
                "oracle J({},{}) coin={} l={} M={}",
                cmp.graph.0, cmp.graph.1, cmp.coin, cmp.loop_weight, cmp.targets
            ),
            err < ORACLE_TOLERANCE,
            format!(
                "max error {err:.3e} over {} steps (tolerance {ORACLE_TOLERANCE:e})",
                cmp.steps
            ),
        );
    }
    Ok(())
}

/// Norm drift for every coin on `spec` with three prefix targets.
pub fn run_unitarity_checks(
    report: &mut VerifyReport,
    spec: GraphSpec,
    steps: usize,
) -> Result<(), EngineError> {
    let table = Shared::new(ArcTable::build(spec)?);
    for coin in CoinKind::ALL {
        let l = if coin.is_lackadaisical() { 1.0 } else { 0.0 };
        let targets = 3.min(spec.vertex_count());
        let cfg = WalkConfig::with_prefix_targets(spec, coin, l, targets, steps)?;
        let drift = norm_drift(cfg, table.clone(), steps)?;
        report.push(
            format!("unitarity {spec} coin={coin} M={targets}"),
            drift < UNITARITY_TOLERANCE,
            format!(
                "norm drift {drift:.3e} over {steps} steps (tolerance {UNITARITY_TOLERANCE:e})"
            ),
        );
    }
    Ok(())
}

pub const GROVER_LAW_GRAPHS: [(usize, usize); 3] = [(300, 1), (25, 2), (13, 3)];

pub fn run_grover_law_checks(
    report: &mut VerifyReport,
    graphs: &[(usize, usize)],
) -> Result<(), ExperimentError> {
    for &(n, k) in graphs {
        let spec = GraphSpec::new(n, k)?;
        let expected = grover_optimal_time(spec);
        let res = grover_law(spec, (4.0 * expected).ceil() as usize + 10)?;
        let detail = match (res.t_peak, res.p_peak) {
            (Some(t), Some(p)) => format!(
                "t_peak {t} vs pi*sqrt(N)/(2*sqrt 2) = {expected:.2} (+/-{GROVER_STEP_TOLERANCE}), p_peak {p:.4} in [{}, {}]",
                GROVER_PROBABILITY_RANGE.0, GROVER_PROBABILITY_RANGE.1
            ),
            _ => "no peak found".to_string(),
        };
        report.push(format!("grover-law {spec}"), res.passed(), detail);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_operators_are_unitary() {
        for coin in CoinKind::ALL {
            let l = if coin.is_lackadaisical() { 1.0 } else { 0.0 };
            let dense = DenseWalk::build(4, 2, coin, l, &[0, 3]);
            assert!(dense.coin.unitarity_defect() < 1e-14);
            assert!(dense.shift.unitarity_defect() == 0.0);
            assert!(dense.evolution.unitarity_defect() < 1e-14);
        }
    }

    #[test]
    fn dense_shift_matches_complete_graph_example() {
        // J(5,1): S |1> (x) |1_2> = |2> (x) |2_1>
        let dense = DenseWalk::build(5, 1, CoinKind::Cgrov, 0.0, &[0]);
        assert_eq!(dense.shift.get(4, 0), ONE);
    }

    #[test]
    fn engine_matches_dense_oracle_on_j42() {
        for coin in CoinKind::ALL {
            let l = if coin.is_lackadaisical() { 1.0 } else { 0.0 };
            let cmp = compare_with_oracle(4, 2, coin, l, 1, 50).unwrap();
            assert!(cmp.max_error() < ORACLE_TOLERANCE, "{cmp:?}");
        }
    }

    #[test]
    fn cg_single_step_on_j42_against_dense_product() {
        let spec = GraphSpec::new(4, 2).unwrap();
        let walk =
            Walk::new(WalkConfig::with_prefix_targets(spec, CoinKind::Cg, 1.0, 1, 1).unwrap())
                .unwrap();
        let dense = DenseWalk::build(4, 2, CoinKind::Cg, 1.0, &[0]);
        let mut s = walk.initial_state();
        walk.step(&mut s).unwrap();
        let expected = dense.evolution.apply(&dense.initial);
        assert!(max_abs_diff(s.amplitudes(), &expected) < 1e-15);
    }

    #[test]
    fn report_rendering() {
        let mut r = VerifyReport::default();
        r.push("a", true, "fine");
        r.push("b", false, "broken");
        assert!(!r.passed());
        let text = r.render_text();
        assert!(text.contains("[PASS] a: fine"));
        assert!(text.contains("[FAIL] b: broken"));
        assert!(text.ends_with("2 checks, 1 failed\n"));
    }
}
