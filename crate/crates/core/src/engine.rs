//! Coined quantum walk evolution on `J(n, k)`.
//!
//! The state lives on arcs, vertex-major and slot-minor: the amplitude of
//! `|v> (x) |slot>` sits at index `v * c + slot` where `c = d` for the standard
//! walk and `c = d + 1` for the lackadaisical walk (self-loop in the last
//! slot). One step is `U = S C`: a blockwise coin followed by the flip-flop
//! shift.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc as Shared;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ArcTable, GraphError, GraphSpec, VertexId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("coin {coin} {reason} (got l = {loop_weight})")]
    LoopWeight {
        coin: CoinKind,
        loop_weight: f64,
        reason: &'static str,
    },
    #[error("target rank {rank} out of range for {vertex_count} vertices")]
    TargetOutOfRange { rank: usize, vertex_count: usize },
    #[error("target rank {0} listed more than once")]
    DuplicateTarget(usize),
    #[error("{requested} targets requested but the graph has only {vertex_count} vertices")]
    TooManyTargets {
        requested: usize,
        vertex_count: usize,
    },
    #[error("state layout mismatch: expected {expected} amplitudes, got {got}")]
    LayoutMismatch { expected: usize, got: usize },
}

/// The four coin operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoinKind {
    /// Lackadaisical coin that searches for the self-loops of the targets.
    Cg,
    /// Grover coin, negated at targets; no self-loop.
    Cgrov,
    /// Lackadaisical Grover coin, negated at targets.
    Cl,
    /// Grover coin at unmarked vertices, `-I` at targets; no self-loop.
    Cskw,
}

impl CoinKind {
    pub const ALL: [CoinKind; 4] = [CoinKind::Cg, CoinKind::Cgrov, CoinKind::Cl, CoinKind::Cskw];

    /// Whether the coin acts on the `d + 1` dimensional space with a self-loop.
    pub fn is_lackadaisical(self) -> bool {
        matches!(self, CoinKind::Cg | CoinKind::Cl)
    }

    /// Short name used on the command line and in artifacts.
    pub fn short_name(self) -> &'static str {
        match self {
            CoinKind::Cg => "g",
            CoinKind::Cgrov => "grov",
            CoinKind::Cl => "l",
            CoinKind::Cskw => "skw",
        }
    }
}

impl fmt::Display for CoinKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown coin '{0}' (expected one of g, grov, l, skw)")]
pub struct UnknownCoin(pub String);

impl FromStr for CoinKind {
    type Err = UnknownCoin;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "g" | "cg" => Ok(CoinKind::Cg),
            "grov" | "cgrov" => Ok(CoinKind::Cgrov),
            "l" | "cl" => Ok(CoinKind::Cl),
            "skw" | "cskw" => Ok(CoinKind::Cskw),
            _ => Err(UnknownCoin(s.to_string())),
        }
    }
}

/// Everything that determines one walk.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    spec: GraphSpec,
    coin: CoinKind,
    loop_weight: f64,
    targets: Vec<VertexId>,
    t_max: usize,
}

impl WalkConfig {
    /// Standard coins take `l = 0`. Lackadaisical coins take any finite
    /// `l >= 0`; `l = 0` keeps the `d + 1` layout with a self-loop that never
    /// gets amplitude.
    pub fn new(
        spec: GraphSpec,
        coin: CoinKind,
        loop_weight: f64,
        targets: Vec<VertexId>,
        t_max: usize,
    ) -> Result<Self, EngineError> {
        let bad_loop = |reason| EngineError::LoopWeight {
            coin,
            loop_weight,
            reason,
        };
        if coin.is_lackadaisical() {
            if !loop_weight.is_finite() || loop_weight < 0.0 {
                return Err(bad_loop("needs a finite, nonnegative self-loop weight"));
            }
        } else if loop_weight != 0.0 {
            return Err(bad_loop("has no self-loop"));
        }
        let vertex_count = spec.vertex_count();
        if targets.len() > vertex_count {
            return Err(EngineError::TooManyTargets {
                requested: targets.len(),
                vertex_count,
            });
        }
        let mut seen = vec![false; vertex_count];
        for t in &targets {
            if t.0 >= vertex_count {
                return Err(EngineError::TargetOutOfRange {
                    rank: t.0,
                    vertex_count,
                });
            }
            if std::mem::replace(&mut seen[t.0], true) {
                return Err(EngineError::DuplicateTarget(t.0));
            }
        }
        Ok(Self {
            spec,
            coin,
            loop_weight,
            targets,
            t_max,
        })
    }

    /// Marks the first `count` vertices in lexicographic order.
    pub fn with_prefix_targets(
        spec: GraphSpec,
        coin: CoinKind,
        loop_weight: f64,
        count: usize,
        t_max: usize,
    ) -> Result<Self, EngineError> {
        if count > spec.vertex_count() {
            return Err(EngineError::TooManyTargets {
                requested: count,
                vertex_count: spec.vertex_count(),
            });
        }
        Self::new(spec, coin, loop_weight, prefix_targets(count), t_max)
    }

    pub fn spec(&self) -> GraphSpec {
        self.spec
    }

    pub fn coin(&self) -> CoinKind {
        self.coin
    }

    pub fn loop_weight(&self) -> f64 {
        self.loop_weight
    }

    pub fn targets(&self) -> &[VertexId] {
        &self.targets
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn with_t_max(mut self, t_max: usize) -> Self {
        self.t_max = t_max;
        self
    }

    /// Coin dimension `c`.
    pub fn slots_per_vertex(&self) -> usize {
        self.spec.degree() + usize::from(self.coin.is_lackadaisical())
    }

    pub fn state_len(&self) -> usize {
        self.spec.vertex_count() * self.slots_per_vertex()
    }

    pub fn coin_weights(&self) -> CoinWeights {
        CoinWeights::new(
            self.spec.degree(),
            self.coin.is_lackadaisical().then_some(self.loop_weight),
        )
    }
}

/// Ranks `0..count`.
pub fn prefix_targets(count: usize) -> Vec<VertexId> {
    (0..count).map(VertexId).collect()
}

/// The reflection axis `|psi_edg>` of the Grover diffusion, which is also
/// the per-vertex coin part of the initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinWeights {
    degree: usize,
    /// Entry on each neighbor slot.
    pub neighbor: f64,
    /// Entry on the self-loop slot; `None` for the standard layout.
    pub self_loop: Option<f64>,
}

impl CoinWeights {
    pub fn new(degree: usize, loop_weight: Option<f64>) -> Self {
        match loop_weight {
            Some(l) => {
                let norm = (degree as f64 + l).sqrt();
                Self {
                    degree,
                    neighbor: 1.0 / norm,
                    self_loop: Some(l.sqrt() / norm),
                }
            }
            None => Self {
                degree,
                neighbor: 1.0 / (degree as f64).sqrt(),
                self_loop: None,
            },
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut w = vec![self.neighbor; self.degree];
        w.extend(self.self_loop);
        w
    }

    /// `D(psi) = 2 w (w . psi) - psi`, in place on one vertex block.
    pub fn diffuse(&self, block: &mut [Complex64]) {
        let (edges, rest) = block.split_at_mut(self.degree);
        let edge_sum: Complex64 = edges.iter().sum();
        let mut overlap = edge_sum * self.neighbor;
        if let (Some(ws), Some(a)) = (self.self_loop, rest.first()) {
            overlap += a * ws;
        }
        let twice = overlap * 2.0;
        let on_edge = twice * self.neighbor;
        for a in edges.iter_mut() {
            *a = on_edge - *a;
        }
        if let (Some(ws), Some(a)) = (self.self_loop, rest.first_mut()) {
            *a = twice * ws - *a;
        }
    }
}

/// Complex amplitudes over all arcs.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    slots_per_vertex: usize,
}

impl StateVector {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>, slots_per_vertex: usize) -> Self {
        assert!(slots_per_vertex > 0 && amplitudes.len() % slots_per_vertex == 0);
        Self {
            amplitudes,
            slots_per_vertex,
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn slots_per_vertex(&self) -> usize {
        self.slots_per_vertex
    }

    pub fn vertex_count(&self) -> usize {
        self.amplitudes.len() / self.slots_per_vertex
    }

    pub fn block(&self, vertex: usize) -> &[Complex64] {
        let c = self.slots_per_vertex;
        &self.amplitudes[vertex * c..(vertex + 1) * c]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability of finding the walker at `vertex`, over its whole coin block.
    pub fn vertex_probability(&self, vertex: usize) -> f64 {
        self.block(vertex).iter().map(|a| a.norm_sqr()).sum()
    }
}

/// A configured walk: the config plus the precomputed arc tables.
#[derive(Debug, Clone)]
pub struct Walk {
    cfg: WalkConfig,
    table: Shared<ArcTable>,
    weights: CoinWeights,
    marked: Vec<bool>,
}

impl Walk {
    pub fn new(cfg: WalkConfig) -> Result<Self, EngineError> {
        let table = Shared::new(ArcTable::build(cfg.spec())?);
        Ok(Self::with_table(cfg, table))
    }

    /// Reuses an arc table built for the same graph.
    pub fn with_table(cfg: WalkConfig, table: Shared<ArcTable>) -> Self {
        assert_eq!(
            table.spec(),
            cfg.spec(),
            "arc table built for another graph"
        );
        let mut marked = vec![false; cfg.spec().vertex_count()];
        for t in cfg.targets() {
            marked[t.0] = true;
        }
        Self {
            weights: cfg.coin_weights(),
            cfg,
            table,
            marked,
        }
    }

    pub fn config(&self) -> &WalkConfig {
        &self.cfg
    }

    pub fn table(&self) -> &Shared<ArcTable> {
        &self.table
    }

    /// `|psi_vtx> (x) |psi_edg>`: every vertex block equals `w / sqrt(N)`.
    pub fn initial_state(&self) -> StateVector {
        let scale = 1.0 / (self.cfg.spec().vertex_count() as f64).sqrt();
        let block: Vec<Complex64> = self
            .weights
            .to_vec()
            .into_iter()
            .map(|w| Complex64::new(w * scale, 0.0))
            .collect();
        let amplitudes = block
            .iter()
            .copied()
            .cycle()
            .take(self.cfg.state_len())
            .collect();
        StateVector::from_amplitudes(amplitudes, self.cfg.slots_per_vertex())
    }

    fn check_layout(&self, state: &StateVector) -> Result<(), EngineError> {
        let expected = self.cfg.state_len();
        if state.amplitudes.len() != expected
            || state.slots_per_vertex != self.cfg.slots_per_vertex()
        {
            return Err(EngineError::LayoutMismatch {
                expected,
                got: state.amplitudes.len(),
            });
        }
        Ok(())
    }

    pub fn apply_coin(&self, state: &mut StateVector) -> Result<(), EngineError> {
        self.check_layout(state)?;
        self.coin_in_place(&mut state.amplitudes);
        Ok(())
    }

    pub fn apply_shift(&self, state: &mut StateVector) -> Result<(), EngineError> {
        self.check_layout(state)?;
        self.shift_in_place(&mut state.amplitudes);
        Ok(())
    }

    /// One application of `U = S C`.
    pub fn step(&self, state: &mut StateVector) -> Result<(), EngineError> {
        self.check_layout(state)?;
        self.coin_in_place(&mut state.amplitudes);
        self.shift_in_place(&mut state.amplitudes);
        Ok(())
    }

    fn coin_in_place(&self, amplitudes: &mut [Complex64]) {
        let c = self.cfg.slots_per_vertex();
        let loop_slot = self.cfg.spec().degree();
        let coin = self.cfg.coin();
        for (block, &marked) in amplitudes.chunks_exact_mut(c).zip(&self.marked) {
            if !marked {
                self.weights.diffuse(block);
                continue;
            }
            match coin {
                CoinKind::Cg => {
                    block[loop_slot] = -block[loop_slot];
                    self.weights.diffuse(block);
                }
                CoinKind::Cgrov | CoinKind::Cl => {
                    self.weights.diffuse(block);
                    block.iter_mut().for_each(|a| *a = -*a);
                }
                CoinKind::Cskw => block.iter_mut().for_each(|a| *a = -*a),
            }
        }
    }

    // The flip-flop shift is an involution on neighbor arcs, so it is a set
    // of disjoint swaps. Self-loop slots are fixed points.
    fn shift_in_place(&self, amplitudes: &mut [Complex64]) {
        let c = self.cfg.slots_per_vertex();
        for v in 0..self.cfg.spec().vertex_count() {
            let neighbors = self.table.neighbors_of(v);
            let back = self.table.reverse_slots_of(v);
            for (slot, (&u, &r)) in neighbors.iter().zip(back).enumerate() {
                let here = v * c + slot;
                let there = u as usize * c + r as usize;
                if there > here {
                    amplitudes.swap(here, there);
                }
            }
        }
    }

    /// Total probability on the target vertices' full coin blocks.
    pub fn success_probability(&self, state: &StateVector) -> f64 {
        self.cfg
            .targets()
            .iter()
            .map(|t| state.vertex_probability(t.0))
            .sum()
    }

    /// `p_s(t)` for `t = 0..=t_max`.
    pub fn trace(&self) -> Vec<f64> {
        let mut state = self.initial_state();
        let mut out = Vec::with_capacity(self.cfg.t_max() + 1);
        out.push(self.success_probability(&state));
        for _ in 0..self.cfg.t_max() {
            self.coin_in_place(&mut state.amplitudes);
            self.shift_in_place(&mut state.amplitudes);
            out.push(self.success_probability(&state));
        }
        out
    }
}

/// Builds the walk and returns its success-probability trace.
pub fn evolve_trace(cfg: &WalkConfig) -> Result<Vec<f64>, EngineError> {
    Ok(Walk::new(cfg.clone())?.trace())
}
