//! Discrete-time coined quantum walk search on Johnson graphs `J(n, k)`.
//!
//! - [`graph`]: ranking and unranking of k-subsets, neighbor lists and the
//!   flip-flop arc pairing.
//! - [`engine`]: state vectors over arcs, the four coins (`g`, `grov`, `l`,
//!   `skw`), the shift and the success probability.
//! - [`experiments`]: peak detection, self-loop sweeps and the figure presets.
//! - [`verify`]: dense-matrix oracle and invariant checks.
//! - [`cli`]: argument validation and CSV/JSON output for the `jwalk` binary.
//!
//! ```
//! use jwalk::engine::{CoinKind, WalkConfig, evolve_trace};
//! use jwalk::graph::GraphSpec;
//!
//! let spec = GraphSpec::new(25, 2).unwrap();
//! let cfg = WalkConfig::with_prefix_targets(spec, CoinKind::Cg, 1.0, 3, 200).unwrap();
//! let trace = evolve_trace(&cfg).unwrap();
//! assert!((trace[0] - 3.0 / 300.0).abs() < 1e-12);
//! ```

pub mod cli;
pub mod engine;
pub mod experiments;
pub mod graph;
pub mod verify;
