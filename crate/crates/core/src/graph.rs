//! Multicut instances: grid construction from edge-probability maps,
//! probability-to-cost mapping, and labeling/partition conversions.
//!
//! Nodes are pixels numbered `row * width + col`. Every edge is stored once
//! with `u < v`, together with its cut-probability `p` and its signed cost
//! `log((1 - p) / p)`, so `p > 0.5` makes the cut side of the edge cheaper.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::union_find::UnionFind;
use crate::PROB_EPS;

/// Per-pixel edge strengths in `[0, 1]`, stored row-major.
#[derive(Clone, Debug)]
pub struct EdgeMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl EdgeMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::EmptyEdgeMap);
        }
        if values.len() != height * width {
            return Err(Error::LengthMismatch {
                expected: height * width,
                actual: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidGraph(format!(
                "edge map value {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    /// Constant-valued map, handy for tests and synthetic setups.
    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.height && col < self.width);
        self.values[row * self.width + col]
    }

    fn check_bounds(&self, (row, col): (usize, usize)) -> Result<()> {
        if row >= self.height || col >= self.width {
            return Err(Error::PixelOutOfBounds {
                row,
                col,
                height: self.height,
                width: self.width,
            });
        }
        Ok(())
    }
}

/// Grid connectivity: the four undirected 8-connectivity directions
/// (E, SE, S, SW), each inserted for every distance in
/// `min_distance..=max_distance`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridConfig {
    pub min_distance: usize,
    pub max_distance: usize,
}

/// (row, col) steps for E, SE, S, SW.
pub const GRID_DIRECTIONS: [(isize, isize); 4] = [(0, 1), (1, 1), (1, 0), (1, -1)];

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            min_distance: 2,
            max_distance: 8,
        }
    }
}

impl GridConfig {
    pub fn new(min_distance: usize, max_distance: usize) -> Result<Self> {
        let config = Self {
            min_distance,
            max_distance,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_distance < 1 || self.min_distance > self.max_distance {
            return Err(Error::InvalidConfig(format!(
                "grid distances must satisfy 1 <= min <= max, got {}..{}",
                self.min_distance, self.max_distance
            )));
        }
        Ok(())
    }
}

/// A multicut instance: `num_nodes` nodes, undirected edges with
/// cut-probabilities and signed costs.
#[derive(Clone, Debug)]
pub struct EdgeGraph {
    num_nodes: usize,
    edges: Vec<(u32, u32)>,
    probs: Vec<f64>,
    costs: Vec<f64>,
}

impl EdgeGraph {
    /// Build a graph from edges and cut-probabilities; costs are derived via
    /// [`probs_to_costs`]. Edges must satisfy `u < v`, stay in range, and
    /// contain no duplicates.
    pub fn from_probs(num_nodes: usize, edges: Vec<(u32, u32)>, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != edges.len() {
            return Err(Error::LengthMismatch {
                expected: edges.len(),
                actual: probs.len(),
            });
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for &(u, v) in &edges {
            if u >= v {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) must satisfy u < v"
                )));
            }
            if v as usize >= num_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) outside node range 0..{num_nodes}"
                )));
            }
            if !seen.insert((u, v)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
        }
        if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidGraph(format!(
                "probability {bad} outside [0, 1]"
            )));
        }
        let costs = probs.iter().map(|&p| probs_to_costs(p)).collect();
        Ok(Self {
            num_nodes,
            edges,
            probs,
            costs,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn endpoints(&self, edge: usize) -> (u32, u32) {
        self.edges[edge]
    }

    /// Replace the per-edge probabilities; costs are recomputed.
    pub fn replace_probs(&mut self, probs: Vec<f64>) -> Result<()> {
        if probs.len() != self.edges.len() {
            return Err(Error::LengthMismatch {
                expected: self.edges.len(),
                actual: probs.len(),
            });
        }
        if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidGraph(format!(
                "probability {bad} outside [0, 1]"
            )));
        }
        self.costs = probs.iter().map(|&p| probs_to_costs(p)).collect();
        self.probs = probs;
        Ok(())
    }

    /// Sorted neighbor lists.
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Lookup table from normalized endpoint pair to edge index.
    pub fn edge_index_map(&self) -> HashMap<(u32, u32), usize> {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i))
            .collect()
    }
}

/// Binary edge labels: 1 = cut, 0 = join.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labeling(Vec<u8>);

impl Labeling {
    pub fn new(labels: Vec<u8>) -> Self {
        assert!(labels.iter().all(|&y| y <= 1), "edge labels must be 0 or 1");
        Self(labels)
    }

    pub fn all_join(num_edges: usize) -> Self {
        Self(vec![0; num_edges])
    }

    pub fn all_cut(num_edges: usize) -> Self {
        Self(vec![1; num_edges])
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, edge: usize) -> u8 {
        self.0[edge]
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().copied()
    }
}

/// Node-to-component assignment with dense 0-based component ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition(Vec<u32>);

impl Partition {
    /// Wrap an already-dense assignment (ids `0..k`, each id used).
    pub fn new(components: Vec<u32>) -> Self {
        let k = components.iter().copied().max().map_or(0, |m| m + 1);
        let mut used = vec![false; k as usize];
        for &c in &components {
            used[c as usize] = true;
        }
        assert!(
            used.iter().all(|&u| u),
            "component ids must form a contiguous range starting at 0"
        );
        Self(components)
    }

    /// Relabel arbitrary component ids densely, in order of first appearance
    /// by node id. The component containing the lowest node gets id 0.
    pub fn from_raw(raw: &[u32]) -> Self {
        let mut remap: HashMap<u32, u32> = HashMap::new();
        let mut next = 0u32;
        let components = raw
            .iter()
            .map(|&c| {
                *remap.entry(c).or_insert_with(|| {
                    let id = next;
                    next += 1;
                    id
                })
            })
            .collect();
        Self(components)
    }

    pub fn singletons(num_nodes: usize) -> Self {
        Self((0..num_nodes as u32).collect())
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, node: usize) -> u32 {
        self.0[node]
    }

    pub fn num_components(&self) -> usize {
        self.0.iter().copied().max().map_or(0, |m| m as usize + 1)
    }
}

/// Signed edge cost `log((1 - p) / p)` with probabilities clamped to
/// `[PROB_EPS, 1 - PROB_EPS]`. Neutral at `p = 0.5`, negative (cut favored)
/// above it.
pub fn probs_to_costs(p: f64) -> f64 {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    ((1.0 - p) / p).ln()
}

/// Integer midpoint rasterization of the segment between two pixels,
/// endpoints included. Always walks from the lexicographically smaller
/// endpoint so the point set is symmetric in its arguments.
fn raster_line(a: (usize, usize), b: (usize, usize)) -> Vec<(usize, usize)> {
    let (start, end) = if a <= b { (a, b) } else { (b, a) };
    let (mut r0, mut c0) = (start.0 as isize, start.1 as isize);
    let (r1, c1) = (end.0 as isize, end.1 as isize);
    let dr = (r1 - r0).abs();
    let dc = -(c1 - c0).abs();
    let sr = if r0 < r1 { 1 } else { -1 };
    let sc = if c0 < c1 { 1 } else { -1 };
    let mut err = dr + dc;
    let mut points = Vec::with_capacity((dr - dc) as usize + 1);
    loop {
        points.push((r0 as usize, c0 as usize));
        if r0 == r1 && c0 == c1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dc {
            err += dc;
            r0 += sr;
        }
        if e2 <= dr {
            err += dr;
            c0 += sc;
        }
    }
    points
}

/// Intervening contour cue: the maximum edge-map value along the rasterized
/// line between two pixels, endpoints included.
pub fn icc_weight(edge_map: &EdgeMap, i: (usize, usize), j: (usize, usize)) -> Result<f64> {
    edge_map.check_bounds(i)?;
    edge_map.check_bounds(j)?;
    let max = raster_line(i, j)
        .into_iter()
        .map(|(r, c)| edge_map.get(r, c))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(max)
}

/// Enumerate the grid edge list for the given dimensions, in deterministic
/// order: row-major source pixel, then direction (E, SE, S, SW), then
/// distance ascending. Shared by [`build_grid_graph`] and the synthetic
/// instance generator.
pub(crate) fn grid_edges(height: usize, width: usize, config: &GridConfig) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    for row in 0..height {
        for col in 0..width {
            let u = (row * width + col) as u32;
            for (dr, dc) in GRID_DIRECTIONS {
                for dist in config.min_distance..=config.max_distance {
                    let r2 = row as isize + dist as isize * dr;
                    let c2 = col as isize + dist as isize * dc;
                    if r2 < 0 || c2 < 0 || r2 >= height as isize || c2 >= width as isize {
                        continue;
                    }
                    let v = (r2 as usize * width + c2 as usize) as u32;
                    debug_assert!(u < v);
                    edges.push((u, v));
                }
            }
        }
    }
    edges
}

/// Build a grid multicut instance from an edge-probability map: one node per
/// pixel, edges per [`GridConfig`], cut-probabilities via [`icc_weight`],
/// costs via [`probs_to_costs`].
pub fn build_grid_graph(edge_map: &EdgeMap, config: &GridConfig) -> Result<EdgeGraph> {
    config.validate()?;
    let (height, width) = (edge_map.height(), edge_map.width());
    let edges = grid_edges(height, width, config);
    let mut probs = Vec::with_capacity(edges.len());
    for &(u, v) in &edges {
        let i = (u as usize / width, u as usize % width);
        let j = (v as usize / width, v as usize % width);
        probs.push(icc_weight(edge_map, i, j)?);
    }
    EdgeGraph::from_probs(height * width, edges, probs)
}

/// Connected components of the join subgraph (edges labeled 0). Infeasible
/// labelings are thereby repaired: a cut edge inside a component is ignored.
/// The component of the lowest node id gets the lowest component id.
pub fn partition_from_labeling(graph: &EdgeGraph, labeling: &Labeling) -> Partition {
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
    let roots: Vec<u32> = (0..graph.num_nodes() as u32).map(|n| uf.find(n)).collect();
    Partition::from_raw(&roots)
}

/// Edge labels induced by a partition: cut iff the endpoints lie in
/// different components. The result is always feasible.
pub fn labeling_from_partition(graph: &EdgeGraph, partition: &Partition) -> Labeling {
    assert_eq!(
        partition.len(),
        graph.num_nodes(),
        "partition length mismatch"
    );
    Labeling::new(
        graph
            .edges()
            .iter()
            .map(|&(u, v)| u8::from(partition.get(u as usize) != partition.get(v as usize)))
            .collect(),
    )
}
