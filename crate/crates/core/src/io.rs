//! File formats: edge maps (PGM or CSV), graph files, partition and
//! labeling CSVs, marginal lists, and the potential-parameter key-value
//! format.
//!
//! The graph text format is one header line `nodes <n> edges <m>` followed
//! by `m` lines `u v p` with 0-based node ids and the cut-probability
//! written with six decimal digits; costs are recomputed on load. Parse
//! errors carry the file path and 1-based line number.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{EdgeGraph, EdgeMap, Labeling, Partition};
use crate::meanfield::{EdgeMarginals, PotentialParams};

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| io_error(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Read an edge map: portable graymaps (`P2` plain, `P5` binary, maxval
/// 255) are detected by their magic bytes, anything else is parsed as a
/// CSV matrix of floats in `[0, 1]`.
pub fn read_edge_map(path: &Path) -> Result<EdgeMap> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        parse_pgm(path, &bytes)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| parse_error(path, 1, "edge map is neither a PGM nor UTF-8 CSV"))?;
        parse_csv_map(path, &text)
    }
}

/// Incremental PGM header tokenizer: skips whitespace and `#` comments,
/// tracking the current line for error messages.
struct PgmScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> PgmScanner<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self {
            bytes,
            pos: 0,
            line: 1,
        }
    }

    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                b' ' | b'\t' | b'\r' => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => return,
            }
        }
    }

    fn token(&mut self) -> Option<(&'a [u8], usize)> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| (&self.bytes[start..self.pos], self.line))
    }

    fn number(&mut self, path: &Path, what: &str) -> Result<usize> {
        let (token, line) = self
            .token()
            .ok_or_else(|| parse_error(path, self.line, format!("missing {what}")))?;
        std::str::from_utf8(token)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_error(path, line, format!("invalid {what}")))
    }
}

fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<EdgeMap> {
    let mut scanner = PgmScanner::new(bytes);
    let (magic, _) = scanner.token().expect("magic bytes were checked");
    let binary = magic == b"P5";
    let width = scanner.number(path, "width")?;
    let height = scanner.number(path, "height")?;
    let maxval = scanner.number(path, "maxval")?;
    if maxval != 255 {
        return Err(parse_error(
            path,
            scanner.line,
            format!("expected maxval 255, got {maxval}"),
        ));
    }
    let mut values = Vec::with_capacity(width * height);
    if binary {
        // A single whitespace byte separates the header from the raster.
        let data = bytes.get(scanner.pos + 1..).unwrap_or(&[]);
        if data.len() < width * height {
            return Err(parse_error(
                path,
                scanner.line,
                format!(
                    "raster too short: expected {} bytes, got {}",
                    width * height,
                    data.len()
                ),
            ));
        }
        values.extend(data[..width * height].iter().map(|&b| f64::from(b) / 255.0));
    } else {
        for _ in 0..width * height {
            let value = scanner.number(path, "pixel value")?;
            if value > 255 {
                return Err(parse_error(
                    path,
                    scanner.line,
                    format!("pixel value {value} exceeds maxval 255"),
                ));
            }
            values.push(value as f64 / 255.0);
        }
    }
    EdgeMap::new(height, width, values)
}

fn parse_csv_map(path: &Path, text: &str) -> Result<EdgeMap> {
    let mut width = None;
    let mut values = Vec::new();
    let mut height = 0;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim().parse().map_err(|_| {
                    parse_error(path, idx + 1, format!("invalid number {:?}", cell.trim()))
                })
            })
            .collect::<Result<_>>()?;
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(parse_error(
                path,
                idx + 1,
                format!("expected {} columns, got {}", width.unwrap(), row.len()),
            ));
        }
        values.extend(row);
        height += 1;
    }
    if height == 0 {
        return Err(Error::EmptyEdgeMap);
    }
    EdgeMap::new(height, width.unwrap_or(0), values)
}

/// Write the graph text format with six-decimal probabilities.
pub fn write_graph(path: &Path, graph: &EdgeGraph) -> Result<()> {
    let mut out = format!("nodes {} edges {}\n", graph.num_nodes(), graph.num_edges());
    for (&(u, v), &p) in graph.edges().iter().zip(graph.probs()) {
        let _ = writeln!(out, "{u} {v} {p:.6}");
    }
    write_text(path, &out)
}

/// Read the graph text format; edge costs are recomputed from the parsed
/// probabilities.
pub fn read_graph(path: &Path) -> Result<EdgeGraph> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_error(path, 1, "empty graph file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (num_nodes, num_edges) = match fields.as_slice() {
        ["nodes", n, "edges", m] => {
            let n = n
                .parse()
                .map_err(|_| parse_error(path, 1, "invalid node count"))?;
            let m = m
                .parse()
                .map_err(|_| parse_error(path, 1, "invalid edge count"))?;
            (n, m)
        }
        _ => {
            return Err(parse_error(
                path,
                1,
                "expected header \"nodes <n> edges <m>\"",
            ))
        }
    };
    let mut edges = Vec::with_capacity(num_edges);
    let mut probs = Vec::with_capacity(num_edges);
    for (idx, line) in lines.by_ref() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [u, v, p] = fields.as_slice() else {
            return Err(parse_error(path, idx + 1, "expected \"u v p\""));
        };
        let u = u
            .parse()
            .map_err(|_| parse_error(path, idx + 1, "invalid node id"))?;
        let v = v
            .parse()
            .map_err(|_| parse_error(path, idx + 1, "invalid node id"))?;
        let p = p
            .parse()
            .map_err(|_| parse_error(path, idx + 1, "invalid probability"))?;
        edges.push((u, v));
        probs.push(p);
    }
    if edges.len() != num_edges {
        return Err(parse_error(
            path,
            1,
            format!(
                "header claims {} edges, file has {}",
                num_edges,
                edges.len()
            ),
        ));
    }
    EdgeGraph::from_probs(num_nodes, edges, probs)
}

/// Write a partition as CSV with a `node,component` header.
pub fn write_partition(path: &Path, partition: &Partition) -> Result<()> {
    let mut out = String::from("node,component\n");
    for (node, &component) in partition.as_slice().iter().enumerate() {
        let _ = writeln!(out, "{node},{component}");
    }
    write_text(path, &out)
}

/// Read a partition CSV; rows may come in any order but every node must
/// appear exactly once. Component ids are renumbered densely.
pub fn read_partition(path: &Path) -> Result<Partition> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "node,component" => {}
        _ => return Err(parse_error(path, 1, "expected header \"node,component\"")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (node, component) = line
            .split_once(',')
            .ok_or_else(|| parse_error(path, idx + 1, "expected \"node,component\""))?;
        let node: usize = node
            .trim()
            .parse()
            .map_err(|_| parse_error(path, idx + 1, "invalid node id"))?;
        let component: u32 = component
            .trim()
            .parse()
            .map_err(|_| parse_error(path, idx + 1, "invalid component id"))?;
        rows.push((idx + 1, node, component));
    }
    let n = rows.len();
    let mut components = vec![None; n];
    for (line, node, component) in rows {
        let slot = components.get_mut(node).ok_or_else(|| {
            parse_error(path, line, format!("node id {node} out of range 0..{n}"))
        })?;
        if slot.replace(component).is_some() {
            return Err(parse_error(path, line, format!("duplicate node {node}")));
        }
    }
    let components: Vec<u32> = components.into_iter().map(Option::unwrap).collect();
    Ok(Partition::from_raw(&components))
}

/// Write an edge labeling as CSV with an `edge,label` header.
pub fn write_labeling(path: &Path, labeling: &Labeling) -> Result<()> {
    let mut out = String::from("edge,label\n");
    for (edge, label) in labeling.iter().enumerate() {
        let _ = writeln!(out, "{edge},{label}");
    }
    write_text(path, &out)
}

/// Read an edge labeling CSV written by [`write_labeling`].
pub fn read_labeling(path: &Path) -> Result<Labeling> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "edge,label" => {}
        _ => return Err(parse_error(path, 1, "expected header \"edge,label\"")),
    }
    let mut labels = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (edge, label) = line
            .split_once(',')
            .ok_or_else(|| parse_error(path, idx + 1, "expected \"edge,label\""))?;
        let edge: usize = edge
            .trim()
            .parse()
            .map_err(|_| parse_error(path, idx + 1, "invalid edge index"))?;
        if edge != labels.len() {
            return Err(parse_error(
                path,
                idx + 1,
                format!("expected edge {}, got {edge}", labels.len()),
            ));
        }
        match label.trim() {
            "0" => labels.push(0),
            "1" => labels.push(1),
            other => {
                return Err(parse_error(
                    path,
                    idx + 1,
                    format!("label must be 0 or 1, got {other:?}"),
                ))
            }
        }
    }
    Ok(Labeling::new(labels))
}

/// Write marginals one per line at full precision.
pub fn write_marginals(path: &Path, marginals: &EdgeMarginals) -> Result<()> {
    let mut out = String::new();
    for &q in marginals.as_slice() {
        let _ = writeln!(out, "{q}");
    }
    write_text(path, &out)
}

/// Read marginals written by [`write_marginals`]: one value in `[0, 1]`
/// per line.
pub fn read_marginals(path: &Path) -> Result<EdgeMarginals> {
    let text = read_text(path)?;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let q: f64 = line
            .parse()
            .map_err(|_| parse_error(path, idx + 1, "invalid marginal"))?;
        if !(0.0..=1.0).contains(&q) {
            return Err(parse_error(
                path,
                idx + 1,
                format!("marginal {q} outside [0, 1]"),
            ));
        }
        values.push(q);
    }
    Ok(EdgeMarginals::new(values))
}

const PARAM_KEYS: [&str; 5] = [
    "gamma_jjj",
    "gamma_jcc",
    "gamma_ccc",
    "gamma_max",
    "unary_weight",
];

/// Write potential parameters as `key = value` lines.
pub fn write_params(path: &Path, params: &PotentialParams) -> Result<()> {
    let values = [
        params.gamma_valid[0],
        params.gamma_valid[1],
        params.gamma_valid[2],
        params.gamma_max,
        params.unary_weight,
    ];
    let mut out = String::new();
    for (key, value) in PARAM_KEYS.iter().zip(values) {
        let _ = writeln!(out, "{key} = {value}");
    }
    write_text(path, &out)
}

/// Read potential parameters; keys not present keep their defaults,
/// unknown keys are rejected.
pub fn read_params(path: &Path) -> Result<PotentialParams> {
    let text = read_text(path)?;
    let mut params = PotentialParams::default();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_error(path, idx + 1, "expected \"key = value\""))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| parse_error(path, idx + 1, "invalid value"))?;
        match key.trim() {
            "gamma_jjj" => params.gamma_valid[0] = value,
            "gamma_jcc" => params.gamma_valid[1] = value,
            "gamma_ccc" => params.gamma_valid[2] = value,
            "gamma_max" => params.gamma_max = value,
            "unary_weight" => params.unary_weight = value,
            other => {
                return Err(parse_error(
                    path,
                    idx + 1,
                    format!("unknown parameter {other:?}"),
                ))
            }
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn plain_pgm_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("map.pgm");
        std::fs::write(
            &path,
            "P2\n# a comment\n3 2\n255\n0 128 255\n64 # trailing comment\n32 16\n",
        )
        .unwrap();
        let map = read_edge_map(&path).unwrap();
        assert_eq!((map.height(), map.width()), (2, 3));
        assert_eq!(map.get(0, 0), 0.0);
        assert_eq!(map.get(0, 2), 1.0);
        assert!((map.get(0, 1) - 128.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn binary_pgm_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("map.pgm");
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend([0u8, 255, 10, 130]);
        std::fs::write(&path, bytes).unwrap();
        let map = read_edge_map(&path).unwrap();
        assert_eq!((map.height(), map.width()), (2, 2));
        assert_eq!(map.get(0, 1), 1.0);
        assert!((map.get(1, 0) - 10.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn pgm_rejects_wrong_maxval_and_short_raster() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("map.pgm");
        std::fs::write(&path, "P2\n1 1\n65535\n0\n").unwrap();
        assert!(read_edge_map(&path)
            .unwrap_err()
            .to_string()
            .contains("maxval"));
        std::fs::write(&path, b"P5\n2 2\n255\n\x00\x01").unwrap();
        assert!(read_edge_map(&path)
            .unwrap_err()
            .to_string()
            .contains("raster too short"));
    }

    #[test]
    fn csv_map_round_trip_and_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("map.csv");
        std::fs::write(&path, "0.1, 0.5, 0.9\n0.2, 0.4, 0.8\n").unwrap();
        let map = read_edge_map(&path).unwrap();
        assert_eq!((map.height(), map.width()), (2, 3));
        assert_eq!(map.get(1, 2), 0.8);

        std::fs::write(&path, "0.1, 0.5\n0.2\n").unwrap();
        let err = read_edge_map(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "missing line number: {err}");
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = read_edge_map(Path::new("/nonexistent/map.pgm")).unwrap_err();
        assert!(err.to_string().starts_with("cannot access"));
    }

    #[test]
    fn graph_file_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("graph.txt");
        let graph = EdgeGraph::from_probs(
            4,
            vec![(0, 1), (1, 2), (2, 3)],
            vec![0.123456789, 0.5, 0.999999],
        )
        .unwrap();
        write_graph(&path, &graph).unwrap();
        let loaded = read_graph(&path).unwrap();
        assert_eq!(loaded.num_nodes(), 4);
        assert_eq!(loaded.edges(), graph.edges());
        for (a, b) in loaded.probs().iter().zip(graph.probs()) {
            assert!((a - b).abs() <= 5e-7, "{a} vs {b}");
        }
        // Costs are recomputed from the parsed probabilities.
        for (c, &p) in loaded.costs().iter().zip(loaded.probs()) {
            assert_eq!(*c, crate::graph::probs_to_costs(p));
        }
    }

    #[test]
    fn graph_file_rejects_malformed_input() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("graph.txt");
        std::fs::write(&path, "vertices 3 edges 1\n0 1 0.5\n").unwrap();
        assert!(read_graph(&path).is_err());
        std::fs::write(&path, "nodes 3 edges 2\n0 1 0.5\n").unwrap();
        assert!(read_graph(&path).is_err());
        std::fs::write(&path, "nodes 3 edges 1\n0 1\n").unwrap();
        let err = read_graph(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "missing line number: {err}");
    }

    #[test]
    fn partition_file_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("partition.csv");
        let partition = Partition::new(vec![0, 0, 1, 2, 1]);
        write_partition(&path, &partition).unwrap();
        assert_eq!(read_partition(&path).unwrap(), partition);
    }

    #[test]
    fn partition_file_rejects_malformed_rows() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("partition.csv");
        std::fs::write(&path, "node,component\n0,0\n1\n").unwrap();
        let err = read_partition(&path).unwrap_err().to_string();
        assert!(err.contains(":3:"), "missing line number: {err}");
        std::fs::write(&path, "node,component\n0,0\n0,1\n").unwrap();
        assert!(read_partition(&path)
            .unwrap_err()
            .to_string()
            .contains("duplicate node"));
        std::fs::write(&path, "0,0\n1,1\n").unwrap();
        assert!(read_partition(&path)
            .unwrap_err()
            .to_string()
            .contains("header"));
    }

    #[test]
    fn labeling_file_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        let labeling = Labeling::new(vec![1, 0, 0, 1, 1]);
        write_labeling(&path, &labeling).unwrap();
        assert_eq!(read_labeling(&path).unwrap(), labeling);
    }

    #[test]
    fn marginals_file_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("marginals.txt");
        let marginals = EdgeMarginals::new(vec![0.0, 0.25, 0.9999999999, 1.0]);
        write_marginals(&path, &marginals).unwrap();
        assert_eq!(read_marginals(&path).unwrap(), marginals);

        std::fs::write(&path, "0.5\n1.5\n").unwrap();
        assert!(read_marginals(&path)
            .unwrap_err()
            .to_string()
            .contains("outside"));
    }

    #[test]
    fn params_file_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("params.txt");
        let params = PotentialParams {
            gamma_valid: [0.125, -0.5, 2.0],
            gamma_max: 12.75,
            unary_weight: 0.9,
        };
        write_params(&path, &params).unwrap();
        assert_eq!(read_params(&path).unwrap(), params);

        std::fs::write(&path, "gamma_max = 3.0\n").unwrap();
        let partial = read_params(&path).unwrap();
        assert_eq!(partial.gamma_max, 3.0);
        assert_eq!(partial.gamma_valid, PotentialParams::default().gamma_valid);

        std::fs::write(&path, "gamma_typo = 1\n").unwrap();
        assert!(read_params(&path)
            .unwrap_err()
            .to_string()
            .contains("unknown parameter"));
    }
}
