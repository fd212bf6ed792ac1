//! Multicut decompositions of edge-weighted graphs via higher-order
//! mean-field inference with cycle-constraint potentials.
//!
//! The crate covers the full pipeline:
//!
//! - building multicut instances from edge-probability maps over a pixel
//!   grid ([`build_grid_graph`], [`icc_weight`]),
//! - enumerating triangles and checking cycle inequalities
//!   ([`enumerate_triangles`], [`count_invalid`], [`is_feasible`]),
//! - relaxed inference with pattern-based triangle potentials, the cooling
//!   function [`phi`] and adaptive schedules ([`run_meanfield`]),
//! - exact and greedy solving plus rounding with repair ([`solve_exact`],
//!   [`greedy_contract`], [`round_and_repair`]),
//! - partition comparison metrics ([`rand_index`],
//!   [`variation_of_information`], [`edge_prf`]).
//!
//! The companion `book/` directory walks through the concepts chapter by
//! chapter; its code snippets are compiled and run as doc-tests.

pub mod cycles;
mod error;
pub mod graph;
pub mod io;
pub mod meanfield;
pub mod metrics;
pub mod solvers;
pub mod synth;
pub mod union_find;

pub use crate::cycles::{
    count_invalid, enumerate_chordless_cycles, enumerate_triangles, is_feasible, triangle_violated,
    CycleStats, Triangle, TriangleSet, ViolationMode,
};
pub use crate::error::{Error, Result};
pub use crate::graph::{
    build_grid_graph, icc_weight, labeling_from_partition, partition_from_labeling, probs_to_costs,
    EdgeGraph, EdgeMap, GridConfig, Labeling, Partition,
};
pub use crate::meanfield::{
    fit_costs, fit_loss, meanfield_step, phi, run_meanfield, softmax_with_temperature,
    unary_potential, CoolingState, EdgeMarginals, FitInstance, FitOptions, MeanFieldConfig,
    PotentialParams, Schedule, ScheduleGranularity, Trajectory, TrajectoryRecord, MIN_TEMPERATURE,
    SATURATION_EPS,
};
pub use crate::metrics::{edge_prf, rand_index, variation_of_information, PartitionScore};
pub use crate::solvers::{
    greedy_contract, objective_cubic, objective_linear, round_and_repair, solve_exact, SolveResult,
};
pub use crate::synth::{planted_grid_instance, SynthConfig, SynthInstance};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before any
/// logarithm is taken.
pub const PROB_EPS: f64 = 1e-6;

// The guide chapters under book/src/ are compiled as doc-tests so the book
// can never drift from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/multicut.md")]
    pub mod multicut {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    pub mod graphs {}
    #[doc = include_str!("../../../book/src/inference.md")]
    pub mod inference {}
    #[doc = include_str!("../../../book/src/solving.md")]
    pub mod solving {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    pub mod metrics {}
}
