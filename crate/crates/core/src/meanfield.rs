//! Mean-field inference with pattern-based triangle potentials.
//!
//! Each edge carries a relaxed cut-marginal `q_e = Q(y_e = 1)`. One
//! iteration recomputes every marginal from the previous iteration's
//! snapshot (a Jacobi update): the exponent for label `l` combines the
//! unary evidence with one term per triangle containing the edge, and the
//! pair is projected back to a distribution by a temperature softmax.
//!
//! A triangle term scores the compatibility of `l` with the current
//! neighbor marginals. The valid triangle configurations — all edges
//! joined, exactly one joined, or all cut — carry their configured costs;
//! all probability mass on invalid configurations (exactly one cut edge) is
//! charged `gamma_max`. Neighbor marginals enter through the cooling
//! function [`phi`], whose exponent `k` sharpens them toward 0/1 as the
//! schedule advances, gradually turning the relaxation into a committed
//! labeling.

use rayon::prelude::*;
use serde::Serialize;

use crate::cycles::{count_invalid, CycleStats, TriangleSet};
use crate::error::{Error, Result};
use crate::graph::{EdgeGraph, Labeling};
use crate::solvers::{objective_cubic, objective_linear};
use crate::PROB_EPS;

/// Lowest softmax temperature a schedule may reach.
pub const MIN_TEMPERATURE: f64 = 0.05;

/// Resting distance from 0 and 1 for saturated marginals.
///
/// [`meanfield_step`] clamps its outputs to
/// `[SATURATION_EPS, 1 - SATURATION_EPS]`: any exponent difference beyond
/// `ln((1 - eps) / eps) ≈ 6.9` saturates the softmax, so a single
/// confident `gamma_max` demand (10 by default) is decisive on its own.
/// Giving every decided marginal the same resting value makes the relaxed
/// cycle inequalities compare decisions instead of saturation depths — a
/// triangle of two confident cuts and a confident join is consistent, not
/// "violated" because one cut saturated a few orders of magnitude deeper
/// than the other — and keeps downstream logarithms of the marginals
/// finite.
pub const SATURATION_EPS: f64 = 1e-3;

/// Per-edge relaxed cut-probabilities `q_e = Q(y_e = 1)`.
///
/// The join side `Q(y_e = 0) = 1 - q_e` is implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMarginals(Vec<f64>);

impl EdgeMarginals {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(
            values.iter().all(|q| (0.0..=1.0).contains(q)),
            "marginals must lie in [0, 1]"
        );
        Self(values)
    }

    /// Initialize from the graph's edge cut-probabilities.
    pub fn from_graph(graph: &EdgeGraph) -> Self {
        Self(graph.probs().to_vec())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, edge: usize) -> f64 {
        self.0[edge]
    }

    /// Threshold to a binary labeling: `q >= threshold` becomes a cut.
    pub fn rounded(&self, threshold: f64) -> Labeling {
        Labeling::new(self.0.iter().map(|&q| u8::from(q >= threshold)).collect())
    }
}

/// Costs of the triangle potential and the unary scaling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PotentialParams {
    /// Costs of the valid configurations, in the order all-join,
    /// one-join-two-cut, all-cut.
    pub gamma_valid: [f64; 3],
    /// Cost charged to the invalid (exactly one cut edge) configurations.
    pub gamma_max: f64,
    /// Scale of the unary evidence term.
    pub unary_weight: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self {
            gamma_valid: [0.0, 0.0, 0.0],
            gamma_max: 10.0,
            unary_weight: 1.0,
        }
    }
}

/// How `k` and the softmax temperature evolve across iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Keep `k = 1` and `t` fixed.
    None,
    /// Increment `k` whenever the invalid-triangle count drops below the
    /// threshold.
    AdaptivePhi,
    /// Lower the temperature by the increment after every iteration.
    SoftmaxLinear,
    /// Lower the temperature only when the invalid-triangle count drops
    /// below the threshold.
    SoftmaxAdaptive,
}

/// Cooling knobs threaded through the iterations: the `phi` exponent `k`,
/// the softmax temperature `t`, and the schedule that moves them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoolingState {
    pub k: f64,
    pub t: f64,
    /// Step applied to `k` or `t` by the schedule.
    pub increment: f64,
    /// The schedule acts only while the invalid count is below this.
    pub threshold_a: usize,
    pub schedule: Schedule,
}

impl Default for CoolingState {
    /// The post-processing defaults: adaptive sharpening with `k` starting
    /// at 1, unit temperature, increment 0.05, threshold 100.
    fn default() -> Self {
        Self {
            k: 1.0,
            t: 1.0,
            increment: 0.05,
            threshold_a: 100,
            schedule: Schedule::AdaptivePhi,
        }
    }
}

impl CoolingState {
    pub fn with_schedule(schedule: Schedule) -> Self {
        Self {
            schedule,
            ..Self::default()
        }
    }

    /// Advance the state by one schedule step given the current count of
    /// invalid relaxed triangles. The temperature never drops below
    /// [`MIN_TEMPERATURE`]; `k` is unbounded.
    pub fn apply(&mut self, invalid_relaxed: usize) {
        let below = invalid_relaxed < self.threshold_a;
        match self.schedule {
            Schedule::None => {}
            Schedule::AdaptivePhi => {
                if below {
                    self.k += self.increment;
                }
            }
            Schedule::SoftmaxLinear => {
                self.t = (self.t - self.increment).max(MIN_TEMPERATURE);
            }
            Schedule::SoftmaxAdaptive => {
                if below {
                    self.t = (self.t - self.increment).max(MIN_TEMPERATURE);
                }
            }
        }
    }
}

/// When the cooling schedule advances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleGranularity {
    /// After every mean-field iteration (the post-processing mode).
    PerIteration,
    /// Never inside [`run_meanfield`]; the caller advances the state
    /// between runs, as a training loop would between epochs.
    PerEpoch,
}

/// Configuration for a full inference run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanFieldConfig {
    pub iterations: usize,
    pub cooling: CoolingState,
    pub schedule_granularity: ScheduleGranularity,
    /// Threshold used for the rounded diagnostics and trajectory
    /// objectives.
    pub rounding_threshold: f64,
}

impl Default for MeanFieldConfig {
    fn default() -> Self {
        Self {
            iterations: 20,
            cooling: CoolingState::default(),
            schedule_granularity: ScheduleGranularity::PerIteration,
            rounding_threshold: 0.5,
        }
    }
}

/// Snapshot taken after each iteration (and once for the initial state).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub iteration: usize,
    pub cycle_stats: CycleStats,
    /// Cooling exponent after this iteration's schedule step.
    pub k: f64,
    /// Softmax temperature after this iteration's schedule step.
    pub t: f64,
    /// Linear objective of the rounded (not repaired) labeling.
    pub objective_linear: f64,
    /// Cubic objective of the same labeling, penalty weight `gamma_max`.
    pub objective_cubic: f64,
}

/// Per-iteration records; always `iterations + 1` entries, with the initial
/// state at index 0.
pub type Trajectory = Vec<TrajectoryRecord>;

/// The cooling function: pushes a probability toward its nearer endpoint.
///
/// For `q >= 0.5` returns `1 - (1 - q)^k`, otherwise `q^k`. At `k = 1` this
/// is the identity; growing `k` sharpens. The endpoints 0 and 1 are fixed
/// points for every `k`.
pub fn phi(q: f64, k: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&q), "phi input {q} outside [0, 1]");
    debug_assert!(k >= 1.0, "phi exponent {k} below 1");
    if q >= 0.5 {
        1.0 - (1.0 - q).powf(k)
    } else {
        q.powf(k)
    }
}

/// Negative log-likelihood of a label under the edge's cut-probability:
/// `-ln p` for a cut (label 1), `-ln (1 - p)` for a join, with `p` clamped
/// away from 0 and 1.
pub fn unary_potential(p: f64, label: u8) -> f64 {
    debug_assert!(label <= 1, "label must be 0 or 1");
    debug_assert!((0.0..=1.0).contains(&p), "probability {p} outside [0, 1]");
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Two-way softmax with temperature `t` and max-subtraction for stability.
/// The outputs are nonnegative and sum to 1.
pub fn softmax_with_temperature(exponents: (f64, f64), t: f64) -> (f64, f64) {
    debug_assert!(t > 0.0, "temperature must be positive");
    let (x0, x1) = exponents;
    let m = x0.max(x1);
    let e0 = ((x0 - m) / t).exp();
    let e1 = ((x1 - m) / t).exp();
    let z = e0 + e1;
    (e0 / z, e1 / z)
}

/// One Jacobi mean-field iteration: every edge's marginal is recomputed
/// from the previous snapshot.
///
/// For each edge and each label, the exponent is the negated sum of the
/// scaled unary potential and one term per incident triangle. A triangle
/// term weights each valid configuration compatible with the label by the
/// product of the cooled neighbor marginals `phi(Q(y_j = p_j), k)`, charges
/// those configurations their `gamma_valid` costs, and charges the
/// remaining probability mass `gamma_max`. The label pair is normalized by
/// [`softmax_with_temperature`] at `cooling.t` and clamped to
/// `[SATURATION_EPS, 1 - SATURATION_EPS]` (see [`SATURATION_EPS`] for why
/// saturated marginals share one resting value).
///
/// Triangle contributions are accumulated in each edge's fixed triangle
/// order, so the result does not depend on how edges are distributed
/// across threads.
pub fn meanfield_step(
    marginals: &EdgeMarginals,
    graph: &EdgeGraph,
    triangles: &TriangleSet,
    params: &PotentialParams,
    cooling: &CoolingState,
) -> Result<EdgeMarginals> {
    assert_eq!(
        marginals.len(),
        graph.num_edges(),
        "marginals length mismatch"
    );
    let q = marginals.as_slice();
    let probs = graph.probs();
    let k = cooling.k;
    let [g_jjj, g_jcc, g_ccc] = params.gamma_valid;

    let updated: Result<Vec<f64>> = (0..graph.num_edges())
        .into_par_iter()
        .map(|i| {
            let mut clique_join = 0.0;
            let mut clique_cut = 0.0;
            for &t in triangles.containing_edge(i) {
                let (ea, eb) = triangles.get(t as usize).other_edges(i as u32);
                let qa = q[ea as usize];
                let qb = q[eb as usize];
                // Cooled neighbor beliefs for each label value.
                let a1 = phi(qa, k);
                let a0 = phi(1.0 - qa, k);
                let b1 = phi(qb, k);
                let b0 = phi(1.0 - qb, k);
                // This edge cut: valid completions are one neighbor cut
                // (one-join-two-cut) or both cut (all-cut).
                let w_one = a0 * b1 + a1 * b0;
                let w_both = a1 * b1;
                let s_cut = w_one + w_both;
                clique_cut += g_jcc * w_one + g_ccc * w_both + (1.0 - s_cut) * params.gamma_max;
                // This edge joined: valid completions are both neighbors
                // joined (all-join) or both cut (one-join-two-cut).
                let w_none = a0 * b0;
                let s_join = w_none + w_both;
                clique_join += g_jjj * w_none + g_jcc * w_both + (1.0 - s_join) * params.gamma_max;
            }
            let exp_join = -(params.unary_weight * unary_potential(probs[i], 0) + clique_join);
            let exp_cut = -(params.unary_weight * unary_potential(probs[i], 1) + clique_cut);
            if !exp_join.is_finite() || !exp_cut.is_finite() {
                return Err(Error::PotentialOverflow { edge: i });
            }
            let (_, q_cut) = softmax_with_temperature((exp_join, exp_cut), cooling.t);
            Ok(q_cut.clamp(SATURATION_EPS, 1.0 - SATURATION_EPS))
        })
        .collect();
    Ok(EdgeMarginals(updated?))
}

#[allow(clippy::too_many_arguments)]
fn record(
    iteration: usize,
    stats: CycleStats,
    cooling: &CoolingState,
    graph: &EdgeGraph,
    triangles: &TriangleSet,
    marginals: &EdgeMarginals,
    params: &PotentialParams,
    threshold: f64,
) -> TrajectoryRecord {
    let rounded = marginals.rounded(threshold);
    TrajectoryRecord {
        iteration,
        cycle_stats: stats,
        k: cooling.k,
        t: cooling.t,
        objective_linear: objective_linear(graph, &rounded),
        objective_cubic: objective_cubic(graph, triangles, &rounded, params.gamma_max),
    }
}

/// Run `config.iterations` mean-field iterations, advancing the cooling
/// schedule after each one (in per-iteration mode) based on the count of
/// invalid relaxed triangles.
///
/// The trajectory has `iterations + 1` records; index 0 captures the
/// initial marginals and cooling state, and each later record is taken
/// after that iteration's schedule step.
pub fn run_meanfield(
    graph: &EdgeGraph,
    initial: &EdgeMarginals,
    triangles: &TriangleSet,
    params: &PotentialParams,
    config: &MeanFieldConfig,
) -> Result<(EdgeMarginals, Trajectory)> {
    let threshold = config.rounding_threshold;
    let mut cooling = config.cooling;
    let mut marginals = initial.clone();
    let mut trajectory = Vec::with_capacity(config.iterations + 1);
    let stats = count_invalid(&marginals, triangles, threshold);
    trajectory.push(record(
        0, stats, &cooling, graph, triangles, &marginals, params, threshold,
    ));
    for iteration in 1..=config.iterations {
        marginals = meanfield_step(&marginals, graph, triangles, params, &cooling)?;
        let stats = count_invalid(&marginals, triangles, threshold);
        if config.schedule_granularity == ScheduleGranularity::PerIteration {
            cooling.apply(stats.invalid_relaxed);
        }
        trajectory.push(record(
            iteration, stats, &cooling, graph, triangles, &marginals, params, threshold,
        ));
    }
    Ok((marginals, trajectory))
}

/// One training example for [`fit_costs`]: a graph, the marginals
/// inference starts from, and the feasible labeling it should recover.
#[derive(Clone, Debug)]
pub struct FitInstance {
    pub graph: EdgeGraph,
    pub initial: EdgeMarginals,
    pub truth: Labeling,
}

/// Knobs for [`fit_costs`].
#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    /// Gradient-descent iteration budget.
    pub iterations: usize,
    /// Initial step size; halved whenever a step fails to improve.
    pub step_size: f64,
    /// Central finite-difference perturbation.
    pub perturbation: f64,
    /// Starting parameters.
    pub initial: PotentialParams,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            iterations: 25,
            step_size: 0.5,
            perturbation: 1e-3,
            initial: PotentialParams::default(),
        }
    }
}

/// Mean binary cross-entropy between the marginals after inference and the
/// ground-truth labels, averaged per instance.
pub fn fit_loss(
    instances: &[FitInstance],
    params: &PotentialParams,
    config: &MeanFieldConfig,
) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::EmptyInstanceSet);
    }
    let triangle_sets: Vec<TriangleSet> = instances
        .iter()
        .map(|inst| crate::cycles::enumerate_triangles(&inst.graph))
        .collect();
    fit_loss_with(instances, &triangle_sets, params, config)
}

fn fit_loss_with(
    instances: &[FitInstance],
    triangle_sets: &[TriangleSet],
    params: &PotentialParams,
    config: &MeanFieldConfig,
) -> Result<f64> {
    let mut total = 0.0;
    for (inst, triangles) in instances.iter().zip(triangle_sets) {
        let (marginals, _) = run_meanfield(&inst.graph, &inst.initial, triangles, params, config)?;
        let mut sum = 0.0;
        for (e, &q) in marginals.as_slice().iter().enumerate() {
            let q = q.clamp(PROB_EPS, 1.0 - PROB_EPS);
            sum -= if inst.truth.get(e) == 1 {
                q.ln()
            } else {
                (1.0 - q).ln()
            };
        }
        total += sum / marginals.len() as f64;
    }
    Ok(total / instances.len() as f64)
}

/// Fit the four triangle costs (`gamma_valid` and `gamma_max`) by central
/// finite-difference gradient descent on [`fit_loss`]. A step is accepted
/// only if it lowers the loss; rejections halve the step size. The unary
/// weight is left untouched.
///
/// Returns the best parameters seen together with the loss after each
/// accepted step (the first entry is the initial loss), which is therefore
/// non-increasing.
pub fn fit_costs(
    instances: &[FitInstance],
    config: &MeanFieldConfig,
    options: &FitOptions,
) -> Result<(PotentialParams, Vec<f64>)> {
    if instances.is_empty() {
        return Err(Error::EmptyInstanceSet);
    }
    let triangle_sets: Vec<TriangleSet> = instances
        .iter()
        .map(|inst| crate::cycles::enumerate_triangles(&inst.graph))
        .collect();
    let as_vec = |p: &PotentialParams| {
        [
            p.gamma_valid[0],
            p.gamma_valid[1],
            p.gamma_valid[2],
            p.gamma_max,
        ]
    };
    let from_vec = |v: [f64; 4], base: &PotentialParams| PotentialParams {
        gamma_valid: [v[0], v[1], v[2]],
        gamma_max: v[3],
        unary_weight: base.unary_weight,
    };

    let mut params = options.initial;
    let mut loss = fit_loss_with(instances, &triangle_sets, &params, config)?;
    let mut history = vec![loss];
    let mut step = options.step_size;
    let h = options.perturbation;

    for _ in 0..options.iterations {
        let theta = as_vec(&params);
        let mut gradient = [0.0; 4];
        for d in 0..4 {
            let mut plus = theta;
            plus[d] += h;
            let mut minus = theta;
            minus[d] -= h;
            let loss_plus =
                fit_loss_with(instances, &triangle_sets, &from_vec(plus, &params), config)?;
            let loss_minus =
                fit_loss_with(instances, &triangle_sets, &from_vec(minus, &params), config)?;
            gradient[d] = (loss_plus - loss_minus) / (2.0 * h);
        }
        let mut candidate = theta;
        for d in 0..4 {
            candidate[d] -= step * gradient[d];
        }
        let candidate = from_vec(candidate, &params);
        let candidate_loss = fit_loss_with(instances, &triangle_sets, &candidate, config)?;
        if candidate_loss < loss {
            params = candidate;
            loss = candidate_loss;
            history.push(loss);
        } else {
            step /= 2.0;
        }
    }
    Ok((params, history))
}
