//! Objectives and decomposition solvers.
//!
//! The linear objective sums the costs of the cut edges; the cubic
//! objective adds a penalty `gamma` for every triangle with exactly one cut
//! edge, which charges infeasibility exactly on triangles. [`solve_exact`]
//! minimizes the linear objective over all node partitions of small
//! instances, [`round_and_repair`] turns relaxed marginals into a feasible
//! decomposition, and [`greedy_contract`] is a contraction heuristic with
//! an all-join fallback.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rayon::prelude::*;

use crate::cycles::{enumerate_triangles, is_feasible, TriangleSet};
use crate::error::{Error, Result};
use crate::graph::{
    labeling_from_partition, partition_from_labeling, EdgeGraph, Labeling, Partition,
};
use crate::meanfield::{EdgeMarginals, PotentialParams};
use crate::union_find::UnionFind;

/// Largest node count accepted by [`solve_exact`]; the number of partitions
/// of 12 elements is still around 4.2 million.
pub const EXACT_SOLVER_NODE_LIMIT: usize = 12;

/// A solver outcome: the labeling, its partition, both objectives, and the
/// feasibility verdict (always true for the solvers in this module).
///
/// The cubic objective is evaluated with the default penalty weight; for a
/// feasible labeling it always equals the linear objective.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub labeling: Labeling,
    pub partition: Partition,
    pub objective_linear: f64,
    pub objective_cubic: f64,
    pub feasible: bool,
}

impl SolveResult {
    fn from_labeling(graph: &EdgeGraph, labeling: Labeling) -> Self {
        let triangles = enumerate_triangles(graph);
        let partition = partition_from_labeling(graph, &labeling);
        let objective = objective_linear(graph, &labeling);
        let cubic = objective_cubic(
            graph,
            &triangles,
            &labeling,
            PotentialParams::default().gamma_max,
        );
        let feasible = is_feasible(graph, &labeling);
        Self {
            labeling,
            partition,
            objective_linear: objective,
            objective_cubic: cubic,
            feasible,
        }
    }
}

/// Sum of the costs of the cut edges.
pub fn objective_linear(graph: &EdgeGraph, labeling: &Labeling) -> f64 {
    assert_eq!(
        labeling.len(),
        graph.num_edges(),
        "labeling length mismatch"
    );
    graph
        .costs()
        .iter()
        .zip(labeling.iter())
        .map(|(&c, y)| c * f64::from(y))
        .sum()
}

/// Number of triangles with exactly one cut edge.
fn invalid_triangle_count(triangles: &TriangleSet, labeling: &Labeling) -> usize {
    triangles
        .triangles()
        .iter()
        .filter(|tri| {
            let cut = u32::from(labeling.get(tri.edges.0 as usize))
                + u32::from(labeling.get(tri.edges.1 as usize))
                + u32::from(labeling.get(tri.edges.2 as usize));
            cut == 1
        })
        .count()
}

/// Linear objective plus `gamma` for every triangle in the invalid
/// exactly-one-cut configuration.
pub fn objective_cubic(
    graph: &EdgeGraph,
    triangles: &TriangleSet,
    labeling: &Labeling,
    gamma: f64,
) -> f64 {
    assert!(gamma >= 0.0, "penalty weight must be nonnegative");
    objective_linear(graph, labeling) + gamma * invalid_triangle_count(triangles, labeling) as f64
}

/// Smaller objective first; equal objectives fall back to the
/// lexicographically smaller assignment vector.
fn better(a: &(f64, Vec<u32>), b: &(f64, Vec<u32>)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn complete_assignments(
    node: usize,
    num_nodes: usize,
    max_block: u32,
    cost: f64,
    assign: &mut Vec<u32>,
    incoming: &[Vec<(u32, f64)>],
    best: &mut Option<(f64, Vec<u32>)>,
) {
    if node == num_nodes {
        if best
            .as_ref()
            .is_none_or(|b| better(&(cost, assign.clone()), b))
        {
            *best = Some((cost, assign.clone()));
        }
        return;
    }
    for block in 0..=max_block + 1 {
        let added: f64 = incoming[node]
            .iter()
            .filter(|&&(u, _)| assign[u as usize] != block)
            .map(|&(_, c)| c)
            .sum();
        assign.push(block);
        complete_assignments(
            node + 1,
            num_nodes,
            max_block.max(block),
            cost + added,
            assign,
            incoming,
            best,
        );
        assign.pop();
    }
}

/// Minimize the linear objective by enumerating every node partition in
/// restricted-growth order (block ids numbered by first appearance), so the
/// result is feasible by construction. Ties go to the lexicographically
/// smallest assignment vector. Instances beyond
/// [`EXACT_SOLVER_NODE_LIMIT`] nodes are rejected.
pub fn solve_exact(graph: &EdgeGraph) -> Result<SolveResult> {
    let n = graph.num_nodes();
    if n > EXACT_SOLVER_NODE_LIMIT {
        return Err(Error::ExactSolverTooLarge {
            nodes: n,
            limit: EXACT_SOLVER_NODE_LIMIT,
        });
    }
    if n == 0 {
        return Ok(SolveResult::from_labeling(graph, Labeling::all_join(0)));
    }

    // Edges grouped by their higher endpoint so the objective can be
    // accumulated one node at a time, in a fixed order.
    let mut incoming: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for (e, &(u, v)) in graph.edges().iter().enumerate() {
        incoming[v as usize].push((u, graph.costs()[e]));
    }
    for list in &mut incoming {
        list.sort_unstable_by_key(|&(u, _)| u);
    }

    // Fan out over all assignment prefixes of a fixed depth, then complete
    // each prefix independently; the reduction order cannot change the
    // winner because candidates are compared under a total order.
    let split_depth = n.min(6);
    let mut prefixes: Vec<(Vec<u32>, f64)> = vec![(vec![0], 0.0)];
    for (node, edges_in) in incoming.iter().enumerate().take(split_depth).skip(1) {
        let mut grown = Vec::with_capacity(prefixes.len() * (node + 1));
        for (assign, cost) in &prefixes {
            let max_block = *assign.iter().max().unwrap();
            for block in 0..=max_block + 1 {
                let added: f64 = edges_in
                    .iter()
                    .filter(|&&(u, _)| assign[u as usize] != block)
                    .map(|&(_, c)| c)
                    .sum();
                let mut next = assign.clone();
                next.push(block);
                grown.push((next, cost + added));
            }
        }
        prefixes = grown;
    }

    let best = prefixes
        .into_par_iter()
        .map(|(assign, cost)| {
            let mut assign = {
                let mut full = Vec::with_capacity(n);
                full.extend_from_slice(&assign);
                full
            };
            let max_block = *assign.iter().max().unwrap();
            let mut best = None;
            complete_assignments(
                assign.len(),
                n,
                max_block,
                cost,
                &mut assign,
                &incoming,
                &mut best,
            );
            best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(a), Some(b)) => Some(if better(&a, &b) { a } else { b }),
                (a, None) => a,
                (None, b) => b,
            },
        )
        .expect("at least one assignment exists");

    let partition = Partition::from_raw(&best.1);
    Ok(SolveResult::from_labeling(
        graph,
        labeling_from_partition(graph, &partition),
    ))
}

/// Threshold the marginals (`q >= threshold` becomes a cut), then restore
/// feasibility by re-inducing the labeling from the connected components of
/// the join subgraph. Already-feasible roundings pass through unchanged.
pub fn round_and_repair(
    marginals: &EdgeMarginals,
    graph: &EdgeGraph,
    threshold: f64,
) -> SolveResult {
    assert!(
        threshold > 0.0 && threshold < 1.0,
        "rounding threshold must lie in (0, 1)"
    );
    let rounded = marginals.rounded(threshold);
    let partition = partition_from_labeling(graph, &rounded);
    SolveResult::from_labeling(graph, labeling_from_partition(graph, &partition))
}

/// Candidate merge ordered by (cost, u, v); the heap pops the most negative
/// aggregate first.
struct Candidate {
    cost: f64,
    u: u32,
    v: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.u.cmp(&other.u))
            .then_with(|| self.v.cmp(&other.v))
    }
}

/// Greedy contraction: repeatedly merge the super-node pair with the most
/// negative aggregate cost (parallel edges summed on merge, ties to the
/// smallest root pair) until no negative aggregate remains, then return the
/// better of the contracted labeling and all-join. The fallback guarantees
/// the reported objective is never positive.
pub fn greedy_contract(graph: &EdgeGraph) -> SolveResult {
    let n = graph.num_nodes();
    let mut uf = UnionFind::new(n);
    let mut neighbors: Vec<HashMap<u32, f64>> = vec![HashMap::new(); n];
    let mut heap: BinaryHeap<std::cmp::Reverse<Candidate>> = BinaryHeap::new();
    for (e, &(u, v)) in graph.edges().iter().enumerate() {
        let cost = graph.costs()[e];
        neighbors[u as usize].insert(v, cost);
        neighbors[v as usize].insert(u, cost);
        heap.push(std::cmp::Reverse(Candidate { cost, u, v }));
    }

    while let Some(std::cmp::Reverse(cand)) = heap.pop() {
        let (ru, rv) = (uf.find(cand.u), uf.find(cand.v));
        if ru == rv {
            continue;
        }
        if (ru.min(rv), ru.max(rv)) != (cand.u, cand.v) {
            continue; // an endpoint was merged away; a fresh entry exists
        }
        let Some(&current) = neighbors[cand.u as usize].get(&cand.v) else {
            continue;
        };
        if current != cand.cost {
            continue; // outdated aggregate
        }
        if current >= 0.0 {
            break;
        }
        uf.union(ru, rv);
        let root = uf.find(ru);
        let absorbed = if root == ru { rv } else { ru };
        let absorbed_adjacency = std::mem::take(&mut neighbors[absorbed as usize]);
        neighbors[root as usize].remove(&absorbed);
        for (w, cost) in absorbed_adjacency {
            if w == root {
                continue;
            }
            neighbors[w as usize].remove(&absorbed);
            let aggregate = neighbors[root as usize].entry(w).or_insert(0.0);
            *aggregate += cost;
            let aggregate = *aggregate;
            neighbors[w as usize].insert(root, aggregate);
            heap.push(std::cmp::Reverse(Candidate {
                cost: aggregate,
                u: root.min(w),
                v: root.max(w),
            }));
        }
    }

    let roots: Vec<u32> = (0..n as u32).map(|v| uf.find(v)).collect();
    let partition = Partition::from_raw(&roots);
    let contracted = labeling_from_partition(graph, &partition);
    let labeling = if objective_linear(graph, &contracted) < 0.0 {
        contracted
    } else {
        Labeling::all_join(graph.num_edges())
    };
    SolveResult::from_labeling(graph, labeling)
}
