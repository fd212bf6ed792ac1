//! Seeded synthetic planted-partition instances on pixel grids.
//!
//! The generator draws a rectangular block partition of the grid (one to
//! three straight row cuts and column cuts each), then assigns every edge a
//! soft cut-probability: 1 where the ground truth cuts, 0 where it joins,
//! plus uniform noise of the configured amplitude, clamped to `[0, 1]`.
//! On top of the band noise, a small fraction of edges gets its evidence
//! flipped to the opposite side (`p -> 1 - p`), emulating isolated detector
//! failures: confidently wrong edges that only cycle consistency — not the
//! edge's own evidence — can correct. The flips are what make the instances
//! interesting: rounding the raw probabilities reproduces every flipped
//! edge verbatim, and a single false join is enough to merge two blocks.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{
    grid_edges, labeling_from_partition, EdgeGraph, GridConfig, Labeling, Partition,
};

/// Configuration of [`planted_grid_instance`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub height: usize,
    pub width: usize,
    pub grid: GridConfig,
    /// Amplitude of the uniform noise added to the planted 0/1 evidence.
    pub noise: f64,
    /// Fraction of edges whose evidence is flipped to the opposite side
    /// after the noise is applied.
    pub flip_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            height: 32,
            width: 32,
            grid: GridConfig {
                min_distance: 2,
                max_distance: 4,
            },
            noise: 0.3,
            flip_fraction: 0.01,
            seed: 0,
        }
    }
}

/// A generated instance: the noisy graph, the planted partition, and the
/// (always feasible) edge labeling it induces.
#[derive(Clone, Debug)]
pub struct SynthInstance {
    pub graph: EdgeGraph,
    pub truth: Partition,
    pub truth_labeling: Labeling,
}

/// Pick 1..=3 distinct interior cut positions along an axis of the given
/// extent, sorted ascending; short axes get fewer or no cuts.
fn sample_cuts(rng: &mut ChaCha8Rng, extent: usize) -> Vec<usize> {
    let interior = extent.saturating_sub(1); // cuts fall between indices
    let wanted = rng.gen_range(1..=3usize).min(interior);
    let mut cuts = rand::seq::index::sample(rng, interior, wanted)
        .into_iter()
        .map(|i| i + 1) // cut before this row/column
        .collect::<Vec<_>>();
    cuts.sort_unstable();
    cuts
}

/// Generate a seeded planted-partition grid instance.
pub fn planted_grid_instance(config: &SynthConfig) -> Result<SynthInstance> {
    if config.height == 0 || config.width == 0 {
        return Err(Error::InvalidConfig(
            "grid dimensions must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&config.noise) {
        return Err(Error::InvalidConfig(format!(
            "noise amplitude {} outside [0, 1]",
            config.noise
        )));
    }
    if !(0.0..=1.0).contains(&config.flip_fraction) {
        return Err(Error::InvalidConfig(format!(
            "flip fraction {} outside [0, 1]",
            config.flip_fraction
        )));
    }
    config.grid.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let row_cuts = sample_cuts(&mut rng, config.height);
    let col_cuts = sample_cuts(&mut rng, config.width);
    let band = |cuts: &[usize], i: usize| cuts.iter().filter(|&&c| c <= i).count() as u32;
    let blocks: Vec<u32> = (0..config.height * config.width)
        .map(|pixel| {
            let (row, col) = (pixel / config.width, pixel % config.width);
            band(&row_cuts, row) * (col_cuts.len() as u32 + 1) + band(&col_cuts, col)
        })
        .collect();
    let truth = Partition::from_raw(&blocks);

    let edges = grid_edges(config.height, config.width, &config.grid);
    let probs: Vec<f64> = edges
        .iter()
        .map(|&(u, v)| {
            let base = if truth.get(u as usize) == truth.get(v as usize) {
                0.0
            } else {
                1.0
            };
            let noisy = (base + rng.gen_range(-config.noise..=config.noise)).clamp(0.0, 1.0);
            // Drawn even when the fraction is zero so the band noise does not
            // depend on whether flips are enabled.
            if rng.gen_bool(config.flip_fraction) {
                1.0 - noisy
            } else {
                noisy
            }
        })
        .collect();
    let graph = EdgeGraph::from_probs(config.height * config.width, edges, probs)?;
    let truth_labeling = labeling_from_partition(&graph, &truth);
    Ok(SynthInstance {
        graph,
        truth,
        truth_labeling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::is_feasible;

    #[test]
    fn generation_is_deterministic_per_seed() {
        let config = SynthConfig {
            height: 8,
            width: 8,
            seed: 42,
            ..SynthConfig::default()
        };
        let a = planted_grid_instance(&config).unwrap();
        let b = planted_grid_instance(&config).unwrap();
        assert_eq!(a.graph.probs(), b.graph.probs());
        assert_eq!(a.truth.as_slice(), b.truth.as_slice());

        let other = planted_grid_instance(&SynthConfig { seed: 43, ..config }).unwrap();
        assert_ne!(a.graph.probs(), other.graph.probs());
    }

    #[test]
    fn truth_labeling_is_feasible_and_blocks_are_rectangular() {
        for seed in 0..10 {
            let config = SynthConfig {
                height: 12,
                width: 9,
                seed,
                ..SynthConfig::default()
            };
            let instance = planted_grid_instance(&config).unwrap();
            assert!(is_feasible(&instance.graph, &instance.truth_labeling));
            // Between 2x2 and 4x4 blocks.
            let components = instance.truth.num_components();
            assert!((4..=16).contains(&components), "got {components}");
        }
    }

    #[test]
    fn noise_stays_within_band_without_flips() {
        let config = SynthConfig {
            height: 16,
            width: 16,
            noise: 0.1,
            flip_fraction: 0.0,
            seed: 7,
            ..SynthConfig::default()
        };
        let instance = planted_grid_instance(&config).unwrap();
        for (e, &p) in instance.graph.probs().iter().enumerate() {
            let base = f64::from(instance.truth_labeling.get(e));
            assert!(
                (p - base).abs() <= 0.1 + 1e-12,
                "edge {e}: {p} vs base {base}"
            );
        }
    }

    #[test]
    fn flips_move_a_plausible_share_of_edges_across_the_threshold() {
        // A fraction above the default exercises a denser failure regime.
        let config = SynthConfig {
            noise: 0.3,
            flip_fraction: 0.02,
            seed: 3,
            ..SynthConfig::default()
        };
        let instance = planted_grid_instance(&config).unwrap();
        let wrong = instance
            .graph
            .probs()
            .iter()
            .enumerate()
            .filter(|&(e, &p)| u8::from(p >= 0.5) != instance.truth_labeling.get(e))
            .count();
        // Only flipped edges can cross 0.5 (band noise stays on its side);
        // around 2% of edges should be wrong, never zero, never a flood.
        let edges = instance.graph.num_edges();
        assert!(wrong > 0, "expected some flipped evidence");
        assert!(
            (wrong as f64) < 0.05 * edges as f64,
            "too many wrong edges: {wrong} of {edges}"
        );
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(planted_grid_instance(&SynthConfig {
            height: 0,
            ..SynthConfig::default()
        })
        .is_err());
        assert!(planted_grid_instance(&SynthConfig {
            noise: 1.5,
            ..SynthConfig::default()
        })
        .is_err());
        assert!(planted_grid_instance(&SynthConfig {
            flip_fraction: -0.1,
            ..SynthConfig::default()
        })
        .is_err());
    }
}
