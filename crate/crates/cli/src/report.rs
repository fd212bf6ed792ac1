//! The machine-readable run report written by `optimize`.
//!
//! The schema is stable: `version`, `input`, `config`, `trajectory`,
//! `final`, `scores`, `seed`, plus an optional `timings` block that is
//! omitted under `--no-timings` so reports from identical runs compare
//! byte-for-byte.

use serde::Serialize;
use sha2::{Digest, Sha256};

use cyclecut::{CycleStats, MeanFieldConfig, PotentialParams, SolveResult, TrajectoryRecord};

pub const REPORT_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct RunReport {
    pub version: u32,
    pub input: InputBlock,
    pub config: ConfigBlock,
    pub trajectory: Vec<TrajectoryRecord>,
    #[serde(rename = "final")]
    pub final_state: FinalBlock,
    /// Partition scores against the supplied ground truth; empty without
    /// one.
    pub scores: serde_json::Value,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Serialize)]
pub struct InputBlock {
    pub path: String,
    pub sha256: String,
    pub nodes: usize,
    pub edges: usize,
    pub triangles: usize,
}

/// Lossless echo of everything that determines the run. The thread count
/// is deliberately absent: it cannot change the result.
#[derive(Serialize)]
pub struct ConfigBlock {
    #[serde(flatten)]
    pub meanfield: MeanFieldConfig,
    pub params: PotentialParams,
}

#[derive(Serialize)]
pub struct FinalBlock {
    pub cycle_stats: CycleStats,
    pub objectives: Objectives,
    pub feasible: bool,
    pub components: usize,
}

#[derive(Serialize)]
pub struct Objectives {
    pub linear: f64,
    pub cubic: f64,
}

#[derive(Serialize)]
pub struct Timings {
    pub total_seconds: f64,
}

impl FinalBlock {
    pub fn from_solve(stats: CycleStats, solve: &SolveResult) -> Self {
        Self {
            cycle_stats: stats,
            objectives: Objectives {
                linear: solve.objective_linear,
                cubic: solve.objective_cubic,
            },
            feasible: solve.feasible,
            components: solve.partition.num_components(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write as _;
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}
