//! Triangles, cycle inequalities, and feasibility.
//!
//! A binary edge labeling decomposes a graph only if no cycle contains
//! exactly one cut edge; on any cycle, a cut edge must be matched by at
//! least one more. The inequality `y_e <= sum of the other labels` over all
//! chordless cycles captures this exactly. The relaxed variant evaluates the
//! same inequality on fractional edge values, which is how inference
//! progress is monitored: [`count_invalid`] counts violated triangles both
//! on the raw marginals and after rounding.
//!
//! Triangles are the cliques the third-order potentials act on;
//! [`enumerate_chordless_cycles`] exists as a small-instance validation
//! oracle for the general inequality.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeGraph, Labeling};
use crate::meanfield::EdgeMarginals;
use crate::union_find::UnionFind;

/// Largest node count accepted by [`enumerate_chordless_cycles`].
pub const CYCLE_ENUMERATION_NODE_LIMIT: usize = 12;

/// A 3-clique with node ids `u < v < w` and the indices of its three edges
/// in the owning graph's edge list, ordered `(uv, vw, uw)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triangle {
    pub nodes: (u32, u32, u32),
    pub edges: (u32, u32, u32),
}

impl Triangle {
    /// The two edges of the triangle other than `edge`.
    ///
    /// Panics if `edge` is not one of the triangle's edges.
    pub fn other_edges(&self, edge: u32) -> (u32, u32) {
        let (a, b, c) = self.edges;
        if edge == a {
            (b, c)
        } else if edge == b {
            (a, c)
        } else if edge == c {
            (a, b)
        } else {
            panic!("edge {edge} is not part of this triangle");
        }
    }
}

/// All triangles of a graph plus, for each edge, the indices of the
/// triangles containing it.
#[derive(Clone, Debug)]
pub struct TriangleSet {
    triangles: Vec<Triangle>,
    per_edge: Vec<Vec<u32>>,
}

impl TriangleSet {
    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn get(&self, index: usize) -> &Triangle {
        &self.triangles[index]
    }

    /// Triangle indices containing the given edge, ascending.
    pub fn containing_edge(&self, edge: usize) -> &[u32] {
        &self.per_edge[edge]
    }
}

/// Violation counts over a triangle set, before and after rounding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CycleStats {
    /// Number of triangles examined.
    pub total_cycles: usize,
    /// Triangles whose relaxed inequality fails on the raw marginals.
    pub invalid_relaxed: usize,
    /// Triangles violated after thresholding each marginal to a binary label.
    pub invalid_rounded: usize,
}

/// Whether [`triangle_violated`] sees fractional or binary values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationMode {
    /// Values anywhere in `[0, 1]`.
    Relaxed,
    /// Values restricted to `{0, 1}`; an exactly-one-cut triangle violates.
    Binary,
}

/// Enumerate all 3-cliques by intersecting sorted higher-id adjacency
/// lists. Output is sorted by `(u, v, w)`, each triangle exactly once.
pub fn enumerate_triangles(graph: &EdgeGraph) -> TriangleSet {
    let n = graph.num_nodes();
    // Neighbors with a higher id only, each list sorted ascending.
    let mut higher = vec![Vec::new(); n];
    for &(u, v) in graph.edges() {
        higher[u as usize].push(v);
    }
    for list in &mut higher {
        list.sort_unstable();
    }
    let index = graph.edge_index_map();

    let mut triangles = Vec::new();
    for u in 0..n as u32 {
        for &v in &higher[u as usize] {
            // w > v closes a triangle u < v < w when present above both.
            let (mut a, mut b) = (0, 0);
            let (nu, nv) = (&higher[u as usize], &higher[v as usize]);
            while a < nu.len() && b < nv.len() {
                match nu[a].cmp(&nv[b]) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        let w = nu[a];
                        if w > v {
                            triangles.push(Triangle {
                                nodes: (u, v, w),
                                edges: (
                                    index[&(u, v)] as u32,
                                    index[&(v, w)] as u32,
                                    index[&(u, w)] as u32,
                                ),
                            });
                        }
                        a += 1;
                        b += 1;
                    }
                }
            }
        }
    }

    let mut per_edge = vec![Vec::new(); graph.num_edges()];
    for (t, tri) in triangles.iter().enumerate() {
        per_edge[tri.edges.0 as usize].push(t as u32);
        per_edge[tri.edges.1 as usize].push(t as u32);
        per_edge[tri.edges.2 as usize].push(t as u32);
    }
    TriangleSet {
        triangles,
        per_edge,
    }
}

/// Check the cycle inequality on a triple of edge values: violated iff some
/// value strictly exceeds the sum of the other two. `(1, 1, 0)` sits on the
/// boundary and is valid.
pub fn triangle_violated(values: (f64, f64, f64), mode: ViolationMode) -> bool {
    let (a, b, c) = values;
    for v in [a, b, c] {
        debug_assert!((0.0..=1.0).contains(&v), "edge value {v} outside [0, 1]");
        if mode == ViolationMode::Binary {
            debug_assert!(v == 0.0 || v == 1.0, "binary mode requires 0/1 values");
        }
    }
    a > b + c || b > a + c || c > a + b
}

/// Count violated triangles on raw marginals (`invalid_relaxed`) and after
/// thresholding each marginal to a binary label (`invalid_rounded`; a value
/// `>= rounding_threshold` becomes a cut).
pub fn count_invalid(
    marginals: &EdgeMarginals,
    triangles: &TriangleSet,
    rounding_threshold: f64,
) -> CycleStats {
    assert!(
        (0.0..1.0).contains(&rounding_threshold) && rounding_threshold > 0.0,
        "rounding threshold must lie in (0, 1)"
    );
    let q = marginals.as_slice();
    let mut invalid_relaxed = 0;
    let mut invalid_rounded = 0;
    for tri in triangles.triangles() {
        let (e0, e1, e2) = tri.edges;
        let relaxed = (q[e0 as usize], q[e1 as usize], q[e2 as usize]);
        if triangle_violated(relaxed, ViolationMode::Relaxed) {
            invalid_relaxed += 1;
        }
        let round = |x: f64| f64::from(u8::from(x >= rounding_threshold));
        let rounded = (relaxed.0, relaxed.1, relaxed.2);
        let rounded = (round(rounded.0), round(rounded.1), round(rounded.2));
        if triangle_violated(rounded, ViolationMode::Binary) {
            invalid_rounded += 1;
        }
    }
    CycleStats {
        total_cycles: triangles.len(),
        invalid_relaxed,
        invalid_rounded,
    }
}

/// Enumerate every chordless cycle of length `3..=max_length` exactly once,
/// as lists of edge indices in traversal order. The canonical traversal
/// starts at the cycle's smallest node and proceeds toward the smaller of
/// its two cycle neighbors.
///
/// Exhaustive enumeration is exponential, so graphs with more than
/// [`CYCLE_ENUMERATION_NODE_LIMIT`] nodes are rejected.
pub fn enumerate_chordless_cycles(graph: &EdgeGraph, max_length: usize) -> Result<Vec<Vec<u32>>> {
    let n = graph.num_nodes();
    if n > CYCLE_ENUMERATION_NODE_LIMIT {
        return Err(Error::CycleEnumerationTooLarge {
            nodes: n,
            limit: CYCLE_ENUMERATION_NODE_LIMIT,
        });
    }
    let adjacency = graph.adjacency();
    let index = graph.edge_index_map();
    let adjacent = |a: u32, b: u32| -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        index.contains_key(&key)
    };

    let mut cycles = Vec::new();
    let mut path: Vec<u32> = Vec::new();
    // DFS over simple paths whose interior nodes all exceed the start node,
    // so every cycle is found exactly once per direction; the direction is
    // fixed by requiring path[1] < last node.
    fn extend(
        path: &mut Vec<u32>,
        adjacency: &[Vec<u32>],
        adjacent: &dyn Fn(u32, u32) -> bool,
        max_length: usize,
        cycles: &mut Vec<Vec<u32>>,
    ) {
        let start = path[0];
        let last = *path.last().unwrap();
        if path.len() >= 3 && path[1] < last && adjacent(last, start) {
            // A chord is an edge between non-consecutive path nodes; the
            // interior pairs were already checked while extending, so only
            // start-to-interior chords remain.
            let chordless = path[2..path.len() - 1]
                .iter()
                .all(|&mid| !adjacent(start, mid));
            if chordless {
                cycles.push(path.clone());
            }
        }
        if path.len() == max_length {
            return;
        }
        for &next in &adjacency[last as usize] {
            if next <= start || path[1..].contains(&next) {
                continue;
            }
            // Reject paths that already carry a chord: `next` may touch only
            // the node it extends.
            if path[1..path.len() - 1]
                .iter()
                .any(|&mid| adjacent(mid, next))
            {
                continue;
            }
            path.push(next);
            extend(path, adjacency, adjacent, max_length, cycles);
            path.pop();
        }
    }

    let max_length = max_length.min(n);
    for start in 0..n as u32 {
        path.clear();
        path.push(start);
        for &second in &adjacency[start as usize] {
            if second <= start {
                continue;
            }
            path.push(second);
            extend(&mut path, &adjacency, &adjacent, max_length, &mut cycles);
            path.pop();
        }
    }

    // Translate node paths to edge-index lists.
    let cycles = cycles
        .into_iter()
        .map(|nodes| {
            let mut edges = Vec::with_capacity(nodes.len());
            for i in 0..nodes.len() {
                let (a, b) = (nodes[i], nodes[(i + 1) % nodes.len()]);
                let key = if a < b { (a, b) } else { (b, a) };
                edges.push(index[&key] as u32);
            }
            edges
        })
        .collect();
    Ok(cycles)
}

/// A labeling decomposes the graph iff no cut edge connects two nodes that
/// the join edges leave in the same component.
pub fn is_feasible(graph: &EdgeGraph, labeling: &Labeling) -> bool {
    assert_eq!(
        labeling.len(),
        graph.num_edges(),
        "labeling length mismatch"
    );
    let mut uf = UnionFind::new(graph.num_nodes());
    for (e, &(u, v)) in graph.edges().iter().enumerate() {
        if labeling.get(e) == 0 {
            uf.union(u, v);
        }
    }
    graph
        .edges()
        .iter()
        .enumerate()
        .all(|(e, &(u, v))| labeling.get(e) == 0 || !uf.same_set(u, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeGraph;
    use crate::meanfield::EdgeMarginals;

    fn complete_graph(n: u32) -> EdgeGraph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        let m = edges.len();
        EdgeGraph::from_probs(n as usize, edges, vec![0.5; m]).unwrap()
    }

    fn four_cycle() -> EdgeGraph {
        EdgeGraph::from_probs(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)], vec![0.5; 4]).unwrap()
    }

    #[test]
    fn triangle_counts_on_small_graphs() {
        assert_eq!(enumerate_triangles(&complete_graph(3)).len(), 1);
        assert_eq!(enumerate_triangles(&complete_graph(4)).len(), 4);
        assert_eq!(enumerate_triangles(&four_cycle()).len(), 0);
    }

    #[test]
    fn triangle_set_is_sorted_and_indexed() {
        let graph = complete_graph(4);
        let set = enumerate_triangles(&graph);
        let nodes: Vec<_> = set.triangles().iter().map(|t| t.nodes).collect();
        let mut sorted = nodes.clone();
        sorted.sort_unstable();
        assert_eq!(nodes, sorted);
        // Every edge of K4 lies in exactly two triangles.
        for e in 0..graph.num_edges() {
            assert_eq!(set.containing_edge(e).len(), 2);
        }
        // Per-edge index round-trips to the triangle list.
        for (e, tris) in (0..graph.num_edges()).map(|e| (e as u32, set.containing_edge(e))) {
            for &t in tris {
                let tri = set.get(t as usize);
                assert!([tri.edges.0, tri.edges.1, tri.edges.2].contains(&e));
            }
        }
    }

    // Oracle: scan all node triples and test the three edges directly.
    fn brute_force_triangles(graph: &EdgeGraph) -> Vec<(u32, u32, u32)> {
        let index = graph.edge_index_map();
        let n = graph.num_nodes() as u32;
        let mut found = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                for w in (v + 1)..n {
                    if index.contains_key(&(u, v))
                        && index.contains_key(&(v, w))
                        && index.contains_key(&(u, w))
                    {
                        found.push((u, v, w));
                    }
                }
            }
        }
        found
    }

    #[test]
    fn triangle_enumeration_matches_triple_scan() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let n = 5 + trial % 26; // up to 30 nodes
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in (u + 1)..n as u32 {
                    if rng.gen_bool(0.3) {
                        edges.push((u, v));
                    }
                }
            }
            let m = edges.len();
            let graph = EdgeGraph::from_probs(n, edges, vec![0.5; m]).unwrap();
            let fast: Vec<_> = enumerate_triangles(&graph)
                .triangles()
                .iter()
                .map(|t| t.nodes)
                .collect();
            assert_eq!(fast, brute_force_triangles(&graph));
        }
    }

    #[test]
    fn violation_test_cases() {
        assert!(triangle_violated((1.0, 0.0, 0.0), ViolationMode::Binary));
        assert!(!triangle_violated((1.0, 1.0, 0.0), ViolationMode::Binary));
        assert!(triangle_violated((0.6, 0.3, 0.2), ViolationMode::Relaxed));
        assert!(!triangle_violated((0.5, 0.5, 0.5), ViolationMode::Relaxed));
    }

    #[test]
    fn violation_is_permutation_invariant() {
        let triples = [
            (0.9, 0.1, 0.3),
            (0.2, 0.2, 0.5),
            (1.0, 0.0, 1.0),
            (0.4, 0.4, 0.4),
        ];
        for (a, b, c) in triples {
            let base = triangle_violated((a, b, c), ViolationMode::Relaxed);
            for perm in [(a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                assert_eq!(triangle_violated(perm, ViolationMode::Relaxed), base);
            }
        }
    }

    #[test]
    fn count_invalid_on_k3() {
        let graph = complete_graph(3);
        let set = enumerate_triangles(&graph);
        let stats = count_invalid(&EdgeMarginals::new(vec![0.9, 0.1, 0.1]), &set, 0.5);
        assert_eq!(
            stats,
            CycleStats {
                total_cycles: 1,
                invalid_relaxed: 1,
                invalid_rounded: 1
            }
        );
        for uniform in [0.0, 1.0] {
            let stats = count_invalid(&EdgeMarginals::new(vec![uniform; 3]), &set, 0.5);
            assert_eq!(stats.invalid_relaxed, 0);
            assert_eq!(stats.invalid_rounded, 0);
        }
    }

    #[test]
    fn binary_marginals_round_to_themselves() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let graph = complete_graph(6);
        let set = enumerate_triangles(&graph);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let q: Vec<f64> = (0..graph.num_edges())
                .map(|_| f64::from(u8::from(rng.gen_bool(0.5))))
                .collect();
            let stats = count_invalid(&EdgeMarginals::new(q), &set, 0.5);
            assert_eq!(stats.invalid_relaxed, stats.invalid_rounded);
        }
    }

    #[test]
    fn chordless_cycles_on_small_graphs() {
        let k3 = enumerate_chordless_cycles(&complete_graph(3), 3).unwrap();
        assert_eq!(k3.len(), 1);
        assert_eq!(k3[0].len(), 3);

        let c4 = enumerate_chordless_cycles(&four_cycle(), 4).unwrap();
        assert_eq!(c4.len(), 1);
        assert_eq!(c4[0].len(), 4);
        // At length limit 3 the square has no cycles at all.
        assert!(enumerate_chordless_cycles(&four_cycle(), 3)
            .unwrap()
            .is_empty());

        // Every 4-cycle of K4 has a chord, so only the triangles remain.
        let k4 = enumerate_chordless_cycles(&complete_graph(4), 4).unwrap();
        assert_eq!(k4.len(), 4);
        assert!(k4.iter().all(|c| c.len() == 3));
    }

    #[test]
    fn cycle_enumeration_guards_node_count() {
        let graph = complete_graph(13);
        let err = enumerate_chordless_cycles(&graph, 5).unwrap_err();
        assert!(err
            .to_string()
            .starts_with("graph too large for exhaustive cycle enumeration"));
    }

    #[test]
    fn feasibility_cases() {
        let k3 = complete_graph(3);
        assert!(!is_feasible(&k3, &Labeling::new(vec![1, 0, 0])));
        assert!(is_feasible(&k3, &Labeling::all_join(3)));
        assert!(is_feasible(&k3, &Labeling::all_cut(3)));

        let square = four_cycle();
        assert!(!is_feasible(&square, &Labeling::new(vec![1, 0, 0, 0])));
        assert!(is_feasible(&square, &Labeling::new(vec![1, 0, 1, 0])));
    }

    // Oracle: a labeling is feasible iff every chordless cycle satisfies the
    // cycle inequality on its binary labels.
    fn feasible_by_cycle_check(graph: &EdgeGraph, labeling: &Labeling) -> bool {
        let cycles = enumerate_chordless_cycles(graph, graph.num_nodes()).unwrap();
        cycles.iter().all(|cycle| {
            let cut: u32 = cycle
                .iter()
                .map(|&e| u32::from(labeling.get(e as usize)))
                .sum();
            cut != 1
        })
    }

    #[test]
    fn feasibility_matches_cycle_inequalities_on_k4() {
        let graph = complete_graph(4);
        for bits in 0..(1u32 << graph.num_edges()) {
            let labels: Vec<u8> = (0..graph.num_edges())
                .map(|e| ((bits >> e) & 1) as u8)
                .collect();
            let labeling = Labeling::new(labels);
            assert_eq!(
                is_feasible(&graph, &labeling),
                feasible_by_cycle_check(&graph, &labeling),
                "labeling {bits:06b}"
            );
        }
    }
}
