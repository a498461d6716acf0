//! Reference measures: vertex/edge overlap, insert/delete graph edit
//! distance and lambda-distance over three matrix representations.
//!
//! VEO and GED look only at which edges are present; weights are ignored.
//! Spectra use the weighted matrices.

use std::time::Instant;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::deltacon::{Method, SimilarityResult};
use crate::error::{Error, Result};
use crate::graph::{Graph, MatrixKind};

pub const DEFAULT_SPECTRUM_CAP: usize = 2_000;

fn edge_overlap(g1: &Graph, g2: &Graph) -> usize {
    let (small, large) = if g1.edge_count() <= g2.edge_count() {
        (g1, g2)
    } else {
        (g2, g1)
    };
    small
        .edges()
        .iter()
        .filter(|e| large.has_edge(e.u, e.v))
        .count()
}

/// `2 (|E1 ∩ E2| + |V1 ∩ V2|) / (|E1| + |E2| + |V1| + |V2|)` with node sets
/// `0..n1` and `0..n2`.
pub fn veo(g1: &Graph, g2: &Graph) -> SimilarityResult {
    let start = Instant::now();
    let (n1, n2) = (g1.node_count(), g2.node_count());
    let common_nodes = n1.min(n2);
    let common_edges = edge_overlap(g1, g2);
    let denom = g1.edge_count() + g2.edge_count() + n1 + n2;
    let sim = if denom == 0 {
        1.0
    } else {
        2.0 * (common_edges + common_nodes) as f64 / denom as f64
    };
    SimilarityResult {
        similarity: Some(sim),
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        ..SimilarityResult::new(Method::Veo)
    }
}

/// `|V1| + |V2| - 2|V1 ∩ V2| + |E1| + |E2| - 2|E1 ∩ E2|`. On a shared node
/// set this is the number of differing adjacency entries above the diagonal.
pub fn ged(g1: &Graph, g2: &Graph) -> SimilarityResult {
    let start = Instant::now();
    let (n1, n2) = (g1.node_count(), g2.node_count());
    let nodes = n1 + n2 - 2 * n1.min(n2);
    let edges = g1.edge_count() + g2.edge_count() - 2 * edge_overlap(g1, g2);
    SimilarityResult {
        distance: Some((nodes + edges) as f64),
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        ..SimilarityResult::new(Method::Ged)
    }
}

/// Eigenvalues of a symmetric graph matrix, largest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub kind: MatrixKind,
    pub values: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn spectrum(g: &Graph, kind: MatrixKind) -> Result<Spectrum> {
    spectrum_capped(g, kind, DEFAULT_SPECTRUM_CAP)
}

pub fn spectrum_capped(g: &Graph, kind: MatrixKind, cap: usize) -> Result<Spectrum> {
    let n = g.node_count();
    if n > cap {
        return Err(Error::TooLarge {
            what: "dense spectrum",
            size: n,
            cap,
            hint: "lambda-distance needs the full spectrum; compare smaller graphs",
        });
    }
    let m = g.view(kind).to_dense();
    let mut values: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(Spectrum { kind, values })
}

/// Euclidean distance between two descending spectra, the shorter one padded
/// with zeros at the tail.
pub fn spectral_distance(a: &Spectrum, b: &Spectrum) -> f64 {
    let k = a.len().max(b.len());
    (0..k)
        .map(|i| {
            let x = a.values.get(i).copied().unwrap_or(0.0);
            let y = b.values.get(i).copied().unwrap_or(0.0);
            (x - y) * (x - y)
        })
        .sum::<f64>()
        .sqrt()
}

pub fn lambda_distance(g1: &Graph, g2: &Graph, kind: MatrixKind) -> Result<SimilarityResult> {
    lambda_distance_capped(g1, g2, kind, DEFAULT_SPECTRUM_CAP)
}

pub fn lambda_distance_capped(
    g1: &Graph,
    g2: &Graph,
    kind: MatrixKind,
    cap: usize,
) -> Result<SimilarityResult> {
    let start = Instant::now();
    let (s1, s2) = rayon::join(
        || spectrum_capped(g1, kind, cap),
        || spectrum_capped(g2, kind, cap),
    );
    let d = spectral_distance(&s1?, &s2?);
    let method = match kind {
        MatrixKind::Adjacency => Method::LambdaAdj,
        MatrixKind::Laplacian => Method::LambdaLap,
        MatrixKind::NormalizedLaplacian => Method::LambdaNl,
    };
    Ok(SimilarityResult {
        distance: Some(d),
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        ..SimilarityResult::new(method)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> Graph {
        Graph::unweighted(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn identical_graphs() {
        let g = cycle(6);
        assert_eq!(veo(&g, &g).similarity, Some(1.0));
        assert_eq!(ged(&g, &g).distance, Some(0.0));
        for kind in [
            MatrixKind::Adjacency,
            MatrixKind::Laplacian,
            MatrixKind::NormalizedLaplacian,
        ] {
            assert_eq!(lambda_distance(&g, &g, kind).unwrap().distance, Some(0.0));
        }
    }

    #[test]
    fn empty_graph_adjacency_spectrum_is_zero() {
        let s = spectrum(&Graph::empty(4), MatrixKind::Adjacency).unwrap();
        assert_eq!(s.values, vec![0.0; 4]);
    }

    #[test]
    fn triangle_adjacency_spectrum() {
        let s = spectrum(&cycle(3), MatrixKind::Adjacency).unwrap();
        let expected = [2.0, -1.0, -1.0];
        for (a, b) in s.values.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn padding_uses_zero_tail() {
        let a = Spectrum {
            kind: MatrixKind::Adjacency,
            values: vec![3.0, 1.0],
        };
        let b = Spectrum {
            kind: MatrixKind::Adjacency,
            values: vec![3.0, 1.0, -2.0],
        };
        assert_eq!(spectral_distance(&a, &b), 2.0);
    }

    #[test]
    fn weights_do_not_change_overlap_measures() {
        let g = cycle(5);
        let heavy = g.map_weights(|e| if e.u == 0 { 7.0 } else { 1.0 }).unwrap();
        assert_eq!(veo(&g, &heavy).similarity, Some(1.0));
        assert_eq!(ged(&g, &heavy).distance, Some(0.0));
        assert!(
            lambda_distance(&g, &heavy, MatrixKind::Adjacency)
                .unwrap()
                .distance
                .unwrap()
                > 0.0
        );
    }

    #[test]
    fn different_node_counts() {
        let a = Graph::unweighted(3, [(0, 1)]).unwrap();
        let b = Graph::unweighted(5, [(0, 1), (3, 4)]).unwrap();
        // nodes: 3 + 5 - 6 = 2, edges: 1 + 2 - 2 = 1
        assert_eq!(ged(&a, &b).distance, Some(3.0));
        // 2 (1 + 3) / (1 + 2 + 3 + 5)
        assert_eq!(veo(&a, &b).similarity, Some(8.0 / 11.0));
    }

    #[test]
    fn spectrum_cap() {
        assert!(matches!(
            spectrum_capped(&Graph::empty(5), MatrixKind::Laplacian, 4),
            Err(Error::TooLarge { .. })
        ));
    }
}
