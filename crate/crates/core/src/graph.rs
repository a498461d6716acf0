//! Undirected weighted graphs on a dense `0..n` node set.
//!
//! A [`Graph`] is immutable once built. It keeps the canonical edge list
//! (`u < v`, sorted) next to a CSR adjacency so the affinity solver can do
//! one sparse mat-vec per iteration without hashing.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
}

impl Graph {
    /// Builds a graph from `(u, v, w)` triples.
    ///
    /// Each undirected pair may appear once, in either orientation. Weights
    /// must be finite and strictly positive.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut canon = Vec::new();
        for (u, v, w) in edges {
            check_edge(n, u, v, w)?;
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            if !seen.insert((a, b)) {
                return Err(Error::validation(format!("duplicate edge ({a}, {b})")));
            }
            canon.push(Edge {
                u: a,
                v: b,
                weight: w,
            });
        }
        Ok(Self::from_canonical(n, canon))
    }

    pub fn unweighted(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(n, pairs.into_iter().map(|(u, v)| (u, v, 1.0)))
    }

    pub fn empty(n: usize) -> Self {
        Self::from_canonical(n, Vec::new())
    }

    /// `edges` must already be validated and deduplicated with `u < v`.
    pub(crate) fn from_canonical(n: usize, mut edges: Vec<Edge>) -> Self {
        edges.sort_by_key(|e| (e.u, e.v));

        let mut counts = vec![0usize; n + 1];
        for e in &edges {
            counts[e.u + 1] += 1;
            counts[e.v + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts;
        let mut cursor = offsets.clone();
        let mut targets = vec![0usize; 2 * edges.len()];
        let mut weights = vec![0.0; 2 * edges.len()];
        for e in &edges {
            targets[cursor[e.u]] = e.v;
            weights[cursor[e.u]] = e.weight;
            cursor[e.u] += 1;
            targets[cursor[e.v]] = e.u;
            weights[cursor[e.v]] = e.weight;
            cursor[e.v] += 1;
        }
        // edges are sorted, so each row comes out sorted by neighbor except
        // for the "reverse" entries; sort rows to make lookups binary-searchable
        for i in 0..n {
            let (lo, hi) = (offsets[i], offsets[i + 1]);
            let mut row: Vec<(usize, f64)> = targets[lo..hi]
                .iter()
                .copied()
                .zip(weights[lo..hi].iter().copied())
                .collect();
            row.sort_by_key(|&(t, _)| t);
            for (k, (t, w)) in row.into_iter().enumerate() {
                targets[lo + k] = t;
                weights[lo + k] = w;
            }
        }

        let degrees = (0..n)
            .map(|i| weights[offsets[i]..offsets[i + 1]].iter().sum())
            .collect();

        Self {
            n,
            edges,
            offsets,
            targets,
            weights,
            degrees,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.offsets[u], self.offsets[u + 1]);
        self.targets[lo..hi]
            .iter()
            .copied()
            .zip(self.weights[lo..hi].iter().copied())
    }

    /// Weighted degree `d[i] = sum_j w(i, j)`.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn degree(&self, u: usize) -> f64 {
        self.degrees[u]
    }

    pub fn max_degree(&self) -> f64 {
        self.degrees.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        if u >= self.n || v >= self.n {
            return None;
        }
        let (lo, hi) = (self.offsets[u], self.offsets[u + 1]);
        self.targets[lo..hi]
            .binary_search(&v)
            .ok()
            .map(|k| self.weights[lo + k])
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v).is_some()
    }

    /// Same edges on a larger node set; the extra nodes are isolated.
    pub fn with_node_count(&self, n: usize) -> Result<Graph> {
        if n < self.n {
            return Err(Error::validation(format!(
                "cannot shrink a graph from {} to {n} nodes",
                self.n
            )));
        }
        if n == self.n {
            return Ok(self.clone());
        }
        Ok(Self::from_canonical(n, self.edges.clone()))
    }

    /// Keeps the edges for which `keep` returns true.
    pub fn filter_edges(&self, mut keep: impl FnMut(&Edge) -> bool) -> Graph {
        let edges = self.edges.iter().filter(|e| keep(e)).copied().collect();
        Self::from_canonical(self.n, edges)
    }

    /// Applies `f` to every edge weight. Non-positive or non-finite results
    /// are rejected.
    pub fn map_weights(&self, mut f: impl FnMut(&Edge) -> f64) -> Result<Graph> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let w = f(e);
            check_edge(self.n, e.u, e.v, w)?;
            edges.push(Edge { weight: w, ..*e });
        }
        Ok(Self::from_canonical(self.n, edges))
    }

    /// Relabels node `i` to `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::validation(
                "permutation length must equal node count",
            ));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::validation("not a permutation"));
            }
        }
        Graph::new(
            self.n,
            self.edges.iter().map(|e| (perm[e.u], perm[e.v], e.weight)),
        )
    }

    pub fn view(&self, kind: MatrixKind) -> LaplacianView<'_> {
        LaplacianView { kind, graph: self }
    }
}

fn check_edge(n: usize, u: usize, v: usize, w: f64) -> Result<()> {
    if u >= n || v >= n {
        return Err(Error::validation(format!(
            "edge ({u}, {v}) references a node outside 0..{n}"
        )));
    }
    if u == v {
        return Err(Error::validation(format!("self-loop on node {u}")));
    }
    if !w.is_finite() || w <= 0.0 {
        return Err(Error::validation(format!(
            "edge ({u}, {v}) has weight {w}; weights must be finite and > 0"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixKind {
    Adjacency,
    Laplacian,
    NormalizedLaplacian,
}

/// A symmetric matrix representation of a graph.
#[derive(Debug, Clone, Copy)]
pub struct LaplacianView<'a> {
    pub kind: MatrixKind,
    pub graph: &'a Graph,
}

impl LaplacianView<'_> {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let g = self.graph;
        let n = g.node_count();
        let mut m = DMatrix::zeros(n, n);
        match self.kind {
            MatrixKind::Adjacency => {
                for e in g.edges() {
                    m[(e.u, e.v)] = e.weight;
                    m[(e.v, e.u)] = e.weight;
                }
            }
            MatrixKind::Laplacian => {
                for i in 0..n {
                    m[(i, i)] = g.degree(i);
                }
                for e in g.edges() {
                    m[(e.u, e.v)] = -e.weight;
                    m[(e.v, e.u)] = -e.weight;
                }
            }
            MatrixKind::NormalizedLaplacian => {
                // I - D^{-1/2} A D^{-1/2}; isolated nodes get an all-zero row
                let inv_sqrt: Vec<f64> = g
                    .degrees()
                    .iter()
                    .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
                    .collect();
                for i in 0..n {
                    if g.degree(i) > 0.0 {
                        m[(i, i)] = 1.0;
                    }
                }
                for e in g.edges() {
                    let x = -e.weight * inv_sqrt[e.u] * inv_sqrt[e.v];
                    m[(e.u, e.v)] = x;
                    m[(e.v, e.u)] = x;
                }
            }
        }
        m
    }
}

/// Neighbor-influence constant `1 / (1 + max weighted degree)`.
///
/// The edgeless graph would give exactly 1; it is clamped to 0.5 so the
/// result always lies in the open interval (0, 1). Any value works there,
/// since the affinity matrix of an edgeless graph is the identity.
pub fn epsilon(g: &Graph) -> f64 {
    epsilon_for_max_degree(g.max_degree())
}

/// One epsilon for a set of graphs that are going to be compared, so their
/// affinity matrices live on the same scale.
pub fn shared_epsilon<'a>(graphs: impl IntoIterator<Item = &'a Graph>) -> f64 {
    let max = graphs
        .into_iter()
        .map(Graph::max_degree)
        .fold(0.0, f64::max);
    epsilon_for_max_degree(max)
}

fn epsilon_for_max_degree(max_degree: f64) -> f64 {
    if max_degree <= 0.0 {
        0.5
    } else {
        1.0 / (1.0 + max_degree)
    }
}

/// Re-hosts both graphs on `max(n1, n2)` nodes.
pub fn union_node_space(g1: &Graph, g2: &Graph) -> (Graph, Graph) {
    let n = g1.node_count().max(g2.node_count());
    (
        g1.with_node_count(n).expect("n is at least the node count"),
        g2.with_node_count(n).expect("n is at least the node count"),
    )
}

/// Re-hosts every graph on the largest node count in the list.
pub fn union_node_space_all(graphs: &[Graph]) -> Vec<Graph> {
    let n = graphs.iter().map(Graph::node_count).max().unwrap_or(0);
    graphs
        .iter()
        .map(|g| g.with_node_count(n).expect("n is at least the node count"))
        .collect()
}

pub fn load_edge_list(
    path: impl AsRef<Path>,
    n_override: Option<usize>,
    one_based: bool,
) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_edge_list(&text, path, n_override, one_based)
}

/// Parses `u v [w]` lines. `#` starts a comment line; blank lines are
/// ignored; LF and CRLF are both accepted.
pub fn parse_edge_list(
    text: &str,
    source: &Path,
    n_override: Option<usize>,
    one_based: bool,
) -> Result<Graph> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };

    let mut raw = Vec::new();
    let mut max_id = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(parse_err(
                lineno,
                format!("expected `u v [w]`, found {} fields", fields.len()),
            ));
        }
        let mut ids = [0usize; 2];
        for (slot, field) in ids.iter_mut().zip(&fields[..2]) {
            let id: usize = field
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid node id `{field}`")))?;
            *slot = if one_based {
                id.checked_sub(1)
                    .ok_or_else(|| parse_err(lineno, "node id 0 in a one-based file".into()))?
            } else {
                id
            };
        }
        let w = match fields.get(2) {
            Some(f) => f
                .parse::<f64>()
                .map_err(|_| parse_err(lineno, format!("invalid weight `{f}`")))?,
            None => 1.0,
        };
        max_id = max_id.max(Some(ids[0].max(ids[1])));
        raw.push((lineno, ids[0], ids[1], w));
    }

    let n = match (n_override, max_id) {
        (Some(n), Some(m)) if m >= n => {
            return Err(Error::validation(format!(
                "{}: node id {m} is out of range for n = {n}",
                source.display()
            )))
        }
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => 0,
    };

    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(raw.len());
    for (lineno, u, v, w) in raw {
        check_edge(n, u, v, w)
            .map_err(|e| Error::validation(format!("{}:{lineno}: {e}", source.display())))?;
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        if !seen.insert((a, b)) {
            return Err(Error::validation(format!(
                "{}:{lineno}: duplicate edge ({a}, {b})",
                source.display()
            )));
        }
        edges.push(Edge {
            u: a,
            v: b,
            weight: w,
        });
    }
    Ok(Graph::from_canonical(n, edges))
}

/// Writes `u v` lines for unit weights and `u v w` otherwise, preceded by a
/// comment carrying the node count.
pub fn write_edge_list(g: &Graph, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "# nodes {} edges {}", g.node_count(), g.edge_count())?;
    for e in g.edges() {
        if e.weight == 1.0 {
            writeln!(out, "{} {}", e.u, e.v)?;
        } else {
            writeln!(out, "{} {} {}", e.u, e.v, e.weight)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, n: Option<usize>) -> Result<Graph> {
        parse_edge_list(text, Path::new("test.edges"), n, false)
    }

    #[test]
    fn parses_plain_pairs() {
        let g = parse("0 1\n1 2", None).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert!(g.edges().iter().all(|e| e.weight == 1.0));
    }

    #[test]
    fn empty_file_with_override() {
        let g = parse("", Some(5)).unwrap();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn weight_is_symmetric() {
        let g = parse("0 1 2.5", None).unwrap();
        assert_eq!(g.weight(0, 1), Some(2.5));
        assert_eq!(g.weight(1, 0), Some(2.5));
    }

    #[test]
    fn comments_and_crlf() {
        let g = parse("# header\r\n0 1\r\n\r\n# x\r\n2 1 3\r\n", None).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.weight(1, 2), Some(3.0));
    }

    #[test]
    fn one_based_ids_shift() {
        let g = parse_edge_list("1 2\n2 3\n", Path::new("x"), None, true).unwrap();
        assert_eq!(g.node_count(), 3);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2));
        assert!(parse_edge_list("0 1\n", Path::new("x"), None, true).is_err());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse("0 1\n0 x\n", None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse("0 1\n\n0 1 2 3\n", None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_bad_weights_and_range() {
        assert!(matches!(
            parse("0 1\n1 0\n", None),
            Err(Error::Validation(_))
        ));
        assert!(matches!(parse("0 1 0\n", None), Err(Error::Validation(_))));
        assert!(matches!(parse("0 1 -2\n", None), Err(Error::Validation(_))));
        assert!(matches!(
            parse("0 1 NaN\n", None),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            parse("0 1 inf\n", None),
            Err(Error::Validation(_))
        ));
        assert!(matches!(parse("0 4\n", Some(4)), Err(Error::Validation(_))));
        assert!(matches!(parse("2 2\n", None), Err(Error::Validation(_))));
    }

    #[test]
    fn degree_sum_identity() {
        let g = Graph::new(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (0, 3, 1.5)]).unwrap();
        let sum: f64 = g.degrees().iter().sum();
        assert_eq!(sum, 2.0 * g.total_weight());
        assert_eq!(g.degree(1), 3.0);
    }

    #[test]
    fn epsilon_examples() {
        let star = Graph::unweighted(5, (1..5).map(|i| (0, i))).unwrap();
        assert_eq!(epsilon(&star), 0.2);
        assert_eq!(epsilon(&Graph::empty(10)), 0.5);
        let w = Graph::new(2, [(0, 1, 3.0)]).unwrap();
        assert_eq!(epsilon(&w), 0.25);
    }

    #[test]
    fn union_pads_and_is_idempotent() {
        let k3 = Graph::unweighted(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let e = Graph::unweighted(5, [(3, 4)]).unwrap();
        let (a, b) = union_node_space(&k3, &e);
        assert_eq!(a.node_count(), 5);
        assert_eq!(b, e);
        assert_eq!(a.degree(3), 0.0);
        assert_eq!(a.degree(4), 0.0);
        assert_eq!(a.edges(), k3.edges());
        let (a2, b2) = union_node_space(&a, &b);
        assert_eq!((a2, b2), (a, b));
        let (s1, s2) = union_node_space(&k3, &k3);
        assert_eq!(s1, k3);
        assert_eq!(s2, k3);
    }

    #[test]
    fn normalized_laplacian_zero_rows_for_isolated_nodes() {
        let g = Graph::unweighted(3, [(0, 1)]).unwrap();
        let m = g.view(MatrixKind::NormalizedLaplacian).to_dense();
        assert!(m.row(2).iter().all(|&x| x == 0.0));
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(0, 1)], -1.0);
    }

    #[test]
    fn write_then_parse_roundtrip() {
        let g = Graph::new(4, [(0, 1, 1.0), (2, 3, 2.5)]).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap(), Some(4)).unwrap();
        assert_eq!(back, g);
    }
}
