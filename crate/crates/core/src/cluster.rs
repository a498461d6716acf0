//! Pairwise DeltaCon similarity across a graph collection and Ward
//! agglomerative clustering on the induced distances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deltacon::{distance_from_sim, signatures, DeltaConOptions, Variant};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Symmetric similarity matrix with a unit diagonal. The upper triangle is
/// computed and mirrored, so `m[i][j]` and `m[j][i]` are the same float.
pub fn pairwise_similarity(
    graphs: &[Graph],
    variant: &Variant,
    opts: &DeltaConOptions,
) -> Result<Vec<Vec<f64>>> {
    if graphs.len() < 2 {
        return Err(Error::validation("need at least 2 graphs to compare"));
    }
    let sigs = signatures(graphs, variant, opts)?;
    let k = graphs.len();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| sigs[i].similarity(&sigs[j]))
        .collect::<Result<Vec<_>>>()?;
    let mut m = vec![vec![1.0; k]; k];
    for (&(i, j), s) in pairs.iter().zip(values) {
        m[i][j] = s;
        m[j][i] = s;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    /// Cluster ids: leaves are `0..n`, the cluster formed at step `t` is `n + t`.
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub leaf_count: usize,
}

impl Dendrogram {
    /// Flat labels for `k` clusters, numbered by first appearance in leaf
    /// order.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        let n = self.leaf_count;
        if k == 0 || k > n {
            return Err(Error::validation(format!(
                "cannot cut {n} leaves into {k} clusters"
            )));
        }
        // cluster id -> representative leaf
        let mut parent: Vec<usize> = (0..2 * n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (t, m) in self.merges.iter().take(n - k).enumerate() {
            let id = n + t;
            let ra = find(&mut parent, m.a);
            let rb = find(&mut parent, m.b);
            parent[ra] = id;
            parent[rb] = id;
        }
        let mut names = std::collections::HashMap::new();
        Ok((0..n)
            .map(|leaf| {
                let root = find(&mut parent, leaf);
                let next = names.len();
                *names.entry(root).or_insert(next)
            })
            .collect())
    }
}

/// Ward linkage on `d_ij = 1 / s_ij - 1`, run through the Lance-Williams
/// update on squared distances. Merge heights are the square roots.
pub fn ward_cluster(sim: &[Vec<f64>]) -> Result<Dendrogram> {
    let n = sim.len();
    if n == 0 {
        return Err(Error::validation("empty similarity matrix"));
    }
    for (i, row) in sim.iter().enumerate() {
        if row.len() != n {
            return Err(Error::validation("similarity matrix must be square"));
        }
        for (j, &s) in row.iter().enumerate() {
            if s != sim[j][i] {
                return Err(Error::validation(format!(
                    "similarity matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }

    let mut d2 = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = distance_from_sim(sim[i][j])?;
                d2[i][j] = d * d;
            }
        }
    }

    // active slots hold (cluster id, size); slot i starts as leaf i
    let mut id: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut active: Vec<bool> = vec![true; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in i + 1..n {
                if !active[j] {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((b, bi, bj)) => {
                        d2[i][j] < b
                            || (d2[i][j] == b
                                && (id[i].min(id[j]), id[i].max(id[j]))
                                    < (id[bi].min(id[bj]), id[bi].max(id[bj])))
                    }
                };
                if better {
                    best = Some((d2[i][j], i, j));
                }
            }
        }
        let (dist2, i, j) = best.expect("at least two active clusters");
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let nk = size[k] as f64;
            let updated =
                ((ni + nk) * d2[i][k] + (nj + nk) * d2[j][k] - nk * dist2) / (ni + nj + nk);
            // round-off can push a zero distance slightly negative
            let updated = updated.max(0.0);
            d2[i][k] = updated;
            d2[k][i] = updated;
        }
        merges.push(Merge {
            a: id[i].min(id[j]),
            b: id[i].max(id[j]),
            height: dist2.sqrt(),
            size: size[i] + size[j],
        });
        id[i] = n + step;
        size[i] += size[j];
        active[j] = false;
    }
    Ok(Dendrogram {
        merges,
        leaf_count: n,
    })
}
