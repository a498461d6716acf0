//! FaBP node affinities.
//!
//! Every affinity column solves `[I + eps^2 D - eps A] x = s0` for some seed
//! vector `s0`: a unit vector `e_i` for the full matrix, a group membership
//! indicator for the reduced one. The solver is the fixed-point iteration
//! `x <- s0 + (eps A - eps^2 D) x`, one sparse pass per step. With
//! `eps = 1 / (1 + max degree)` the iteration matrix has infinity-norm below
//! one, so it always converges.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 1000;
pub const DEFAULT_FULL_CAP: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Infinity-norm bound on the residual `s0 - [I + eps^2 D - eps A] x`.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest node count accepted by [`full_affinity`].
    pub full_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            full_cap: DEFAULT_FULL_CAP,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(self, tol: f64) -> Self {
        Self { tol, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSolution {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Residual of every iterate, starting with `x = s0`.
    pub residuals: Vec<f64>,
}

/// Solves one affinity column and returns just the vector.
pub fn solve_affinity_column(
    g: &Graph,
    seed_vector: &[f64],
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    solve_column(g, seed_vector, eps, tol, max_iter).map(|s| s.values)
}

pub fn solve_column(
    g: &Graph,
    seed_vector: &[f64],
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ColumnSolution> {
    let mut out = solve_columns(g, &[seed_vector.to_vec()], eps, tol, max_iter)?;
    Ok(out.pop().expect("one column in, one column out"))
}

/// Solves several columns in one sweep over the graph.
///
/// Columns never mix: each one follows exactly the iterates it would follow
/// on its own and stops being recorded once it converges, so the result for
/// a column does not depend on which other columns share its sweep.
pub fn solve_columns(
    g: &Graph,
    seeds: &[Vec<f64>],
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<ColumnSolution>> {
    check_eps(eps)?;
    if !(tol > 0.0) {
        return Err(Error::validation(format!("tol must be > 0, got {tol}")));
    }
    let n = g.node_count();
    for s in seeds {
        if s.len() != n {
            return Err(Error::validation(format!(
                "seed vector has length {}, graph has {n} nodes",
                s.len()
            )));
        }
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("seed vector must be finite"));
        }
    }
    let mut out = Vec::with_capacity(seeds.len());
    let mut rest = seeds;
    while !rest.is_empty() {
        let (block, tail) = rest.split_at(rest.len().min(8));
        out.extend(match block.len() {
            1 => sweep::<1>(g, block, eps, tol, max_iter)?,
            2 => sweep::<2>(g, block, eps, tol, max_iter)?,
            3 | 4 => sweep::<4>(g, block, eps, tol, max_iter)?,
            _ => sweep::<8>(g, block, eps, tol, max_iter)?,
        });
        rest = tail;
    }
    Ok(out)
}

/// Fixed-point iteration on up to `B` columns stored row-major, `B` values
/// per node. Lanes past `seeds.len()` carry zero seeds and are ignored.
fn sweep<const B: usize>(
    g: &Graph,
    seeds: &[Vec<f64>],
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<ColumnSolution>> {
    let n = g.node_count();
    let cols = seeds.len();
    let eps2 = eps * eps;
    let mut s0 = vec![0.0; n * B];
    for (c, seed) in seeds.iter().enumerate() {
        for i in 0..n {
            s0[i * B + c] = seed[i];
        }
    }
    let mut x = s0.clone();
    let mut next = vec![0.0; n * B];
    let mut residuals = vec![Vec::new(); cols];
    let mut done: Vec<Option<ColumnSolution>> = vec![None; cols];

    for iteration in 0..=max_iter {
        // next = s0 + eps * A x - eps^2 * D x; the residual of x is next - x
        let mut res = [0.0f64; B];
        for i in 0..n {
            let mut ax = [0.0f64; B];
            for (j, w) in g.neighbors(i) {
                let xj = &x[j * B..j * B + B];
                for c in 0..B {
                    ax[c] += w * xj[c];
                }
            }
            let d = g.degree(i);
            for c in 0..B {
                let xi = x[i * B + c];
                let y = s0[i * B + c] + eps * ax[c] - eps2 * d * xi;
                res[c] = res[c].max((y - xi).abs());
                next[i * B + c] = y;
            }
        }
        let mut worst = 0.0f64;
        for c in 0..cols {
            if done[c].is_some() {
                continue;
            }
            residuals[c].push(res[c]);
            if !res[c].is_finite() {
                return Err(Error::NotConverged {
                    iterations: iteration,
                    residual: res[c],
                });
            }
            if res[c] <= tol {
                done[c] = Some(ColumnSolution {
                    values: (0..n).map(|i| x[i * B + c]).collect(),
                    iterations: iteration,
                    residual: res[c],
                    residuals: std::mem::take(&mut residuals[c]),
                });
            } else {
                worst = worst.max(res[c]);
            }
        }
        if done.iter().all(Option::is_some) {
            return Ok(done.into_iter().map(Option::unwrap).collect());
        }
        if iteration == max_iter {
            return Err(Error::NotConverged {
                iterations: iteration,
                residual: worst,
            });
        }
        std::mem::swap(&mut x, &mut next);
    }
    unreachable!("loop returns on its last iteration")
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "epsilon must lie in (0, 1), got {eps}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AffinityKind {
    Full,
    Reduced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub iterations: Vec<usize>,
    pub max_residual: f64,
}

/// Dense `rows x cols` affinity matrix, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    pub kind: AffinityKind,
    pub epsilon: f64,
    pub stats: SolverStats,
}

impl AffinityMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[col * self.rows + row]
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.values[col * self.rows..(col + 1) * self.rows]
    }

    /// Wraps column-major values computed elsewhere.
    pub fn from_values(
        rows: usize,
        cols: usize,
        values: Vec<f64>,
        kind: AffinityKind,
        epsilon: f64,
    ) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::validation(format!(
                "{} values do not fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("affinity values must be finite"));
        }
        Ok(Self {
            rows,
            cols,
            values,
            kind,
            epsilon,
            stats: SolverStats {
                iterations: Vec::new(),
                max_residual: 0.0,
            },
        })
    }

    /// Raw column-major storage.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Writes a `n,cols,epsilon` header line, its values, then the matrix
    /// row by row.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "n,cols,epsilon")?;
        writeln!(out, "{},{},{}", self.rows, self.cols, self.epsilon)?;
        for r in 0..self.rows {
            let line: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    fn from_columns(
        rows: usize,
        columns: Vec<ColumnSolution>,
        kind: AffinityKind,
        epsilon: f64,
    ) -> Self {
        let cols = columns.len();
        let mut values = Vec::with_capacity(rows * cols);
        let mut iterations = Vec::with_capacity(cols);
        let mut max_residual = 0.0f64;
        for c in columns {
            values.extend_from_slice(&c.values);
            iterations.push(c.iterations);
            max_residual = max_residual.max(c.residual);
        }
        Self {
            rows,
            cols,
            values,
            kind,
            epsilon,
            stats: SolverStats {
                iterations,
                max_residual,
            },
        }
    }
}

/// The `n x n` matrix whose column `i` is the affinity vector seeded at `e_i`.
pub fn full_affinity(g: &Graph, eps: f64, cfg: &SolverConfig) -> Result<AffinityMatrix> {
    let n = g.node_count();
    if n > cfg.full_cap {
        return Err(Error::TooLarge {
            what: "full affinity matrix",
            size: n,
            cap: cfg.full_cap,
            hint: "use the grouped (reduced) variant",
        });
    }
    check_eps(eps)?;
    let columns = solve_blocks(
        g,
        n,
        |i| {
            let mut seed = vec![0.0; n];
            seed[i] = 1.0;
            seed
        },
        eps,
        cfg,
    )?;
    Ok(AffinityMatrix::from_columns(
        n,
        columns,
        AffinityKind::Full,
        eps,
    ))
}

/// The `n x g` matrix whose column `k` is seeded with the membership vector
/// of group `k`.
pub fn reduced_affinity(
    g: &Graph,
    partition: &Partition,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<AffinityMatrix> {
    let n = g.node_count();
    if partition.len() != n {
        return Err(Error::validation(format!(
            "partition covers {} nodes, graph has {n}",
            partition.len()
        )));
    }
    check_eps(eps)?;
    let columns = solve_blocks(
        g,
        partition.groups(),
        |k| partition.seed_vector(k),
        eps,
        cfg,
    )?;
    Ok(AffinityMatrix::from_columns(
        n,
        columns,
        AffinityKind::Reduced,
        eps,
    ))
}

/// Solves `count` columns in parallel blocks of eight; block boundaries
/// depend only on the column index.
fn solve_blocks(
    g: &Graph,
    count: usize,
    seed: impl Fn(usize) -> Vec<f64> + Sync,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<Vec<ColumnSolution>> {
    let blocks = (0..count.div_ceil(8))
        .into_par_iter()
        .map(|b| {
            let seeds: Vec<Vec<f64>> = (b * 8..count.min(b * 8 + 8)).map(&seed).collect();
            solve_columns(g, &seeds, eps, cfg.tol, cfg.max_iter)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

/// Assignment of every node to one of `g` non-empty groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    groups: usize,
    assignment: Vec<usize>,
    pub rng_seed: Option<u64>,
}

impl Partition {
    pub fn from_assignment(groups: usize, assignment: Vec<usize>) -> Result<Self> {
        if groups == 0 {
            return Err(Error::validation("a partition needs at least one group"));
        }
        let mut used = vec![false; groups];
        for &a in &assignment {
            if a >= groups {
                return Err(Error::validation(format!(
                    "group id {a} out of range for {groups} groups"
                )));
            }
            used[a] = true;
        }
        if used.iter().any(|u| !u) {
            return Err(Error::validation("every group must be non-empty"));
        }
        Ok(Self {
            groups,
            assignment,
            rng_seed: None,
        })
    }

    /// Every node in its own group, node `i` in group `i`.
    pub fn singletons(n: usize) -> Self {
        Self {
            groups: n,
            assignment: (0..n).collect(),
            rng_seed: None,
        }
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn members(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |&(_, &a)| a == k)
            .map(|(i, _)| i)
    }

    /// 0/1 membership indicator of group `k`.
    pub fn seed_vector(&self, k: usize) -> Vec<f64> {
        self.assignment
            .iter()
            .map(|&a| if a == k { 1.0 } else { 0.0 })
            .collect()
    }
}

const PARTITION_REDRAWS: usize = 64;

/// Uniform random assignment of `n` nodes to `g` groups, redrawn until no
/// group is empty. When `g` is close to `n` a surjective draw is unlikely, so
/// after a bounded number of redraws each empty group is filled by moving a
/// random node out of a group that has more than one member.
pub fn random_partition(n: usize, g: usize, rng_seed: u64) -> Result<Partition> {
    if g < 1 || g > n {
        return Err(Error::validation(format!(
            "group count must satisfy 1 <= g <= n (g = {g}, n = {n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut assignment = vec![0usize; n];
    let mut sizes = vec![0usize; g];
    for _ in 0..PARTITION_REDRAWS {
        sizes.iter_mut().for_each(|s| *s = 0);
        for a in assignment.iter_mut() {
            *a = rng.gen_range(0..g);
            sizes[*a] += 1;
        }
        if sizes.iter().all(|&s| s > 0) {
            return Ok(Partition {
                groups: g,
                assignment,
                rng_seed: Some(rng_seed),
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..g {
        if sizes[k] > 0 {
            continue;
        }
        order.shuffle(&mut rng);
        let donor = *order
            .iter()
            .find(|&&i| sizes[assignment[i]] > 1)
            .expect("g <= n leaves a group with a spare member");
        sizes[assignment[donor]] -= 1;
        assignment[donor] = k;
        sizes[k] = 1;
    }
    Ok(Partition {
        groups: g,
        assignment,
        rng_seed: Some(rng_seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn system_matrix(g: &Graph, eps: f64) -> DMatrix<f64> {
        let n = g.node_count();
        let mut m = DMatrix::identity(n, n);
        for i in 0..n {
            m[(i, i)] += eps * eps * g.degree(i);
        }
        for e in g.edges() {
            m[(e.u, e.v)] -= eps * e.weight;
            m[(e.v, e.u)] -= eps * e.weight;
        }
        m
    }

    #[test]
    fn empty_graph_returns_seed() {
        let g = Graph::empty(4);
        let x = solve_affinity_column(&g, &[1.0, 0.0, 0.0, 0.0], 0.5, 1e-12, 10).unwrap();
        assert_eq!(x, vec![1.0, 0.0, 0.0, 0.0]);
        let s = full_affinity(&g, 0.5, &SolverConfig::default()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(s.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn single_edge_matches_two_by_two_inverse() {
        // [[1.0625, -0.25], [-0.25, 1.0625]] x = [1, 0]
        let det = 1.0625f64 * 1.0625 - 0.0625;
        let expected = [1.0625 / det, 0.25 / det];
        let g = Graph::unweighted(2, [(0, 1)]).unwrap();
        let x = solve_affinity_column(&g, &[1.0, 0.0], 0.25, 1e-12, 1000).unwrap();
        assert!((x[0] - expected[0]).abs() < 1e-10);
        assert!((x[1] - expected[1]).abs() < 1e-10);
    }

    #[test]
    fn triangle_matches_dense_inverse() {
        let g = Graph::unweighted(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let eps = 1.0 / 3.0;
        let inv = system_matrix(&g, eps).try_inverse().unwrap();
        let x = solve_affinity_column(&g, &[1.0, 0.0, 0.0], eps, 1e-12, 1000).unwrap();
        for i in 0..3 {
            assert!((x[i] - inv[(i, 0)]).abs() <= 1e-8);
        }
    }

    #[test]
    fn residual_bound_holds() {
        let g = Graph::unweighted(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]).unwrap();
        let eps = crate::graph::epsilon(&g);
        let seed = [0.0, 1.0, 0.0, 1.0, 0.0];
        let sol = solve_column(&g, &seed, eps, 1e-9, 1000).unwrap();
        let m = system_matrix(&g, eps);
        let x = nalgebra::DVector::from_vec(sol.values.clone());
        let r = nalgebra::DVector::from_row_slice(&seed) - m * x;
        assert!(r.amax() <= 1e-9);
        assert_eq!(sol.residuals.len(), sol.iterations + 1);
    }

    #[test]
    fn too_large_epsilon_fails_to_converge() {
        let g = Graph::unweighted(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)]).unwrap();
        let err = solve_affinity_column(&g, &[1.0, 0.0, 0.0, 0.0], 0.9, 1e-9, 200).unwrap_err();
        assert!(matches!(err, Error::NotConverged { .. }));
    }

    #[test]
    fn argument_validation() {
        let g = Graph::unweighted(2, [(0, 1)]).unwrap();
        assert!(solve_affinity_column(&g, &[1.0, 0.0], 0.0, 1e-9, 10).is_err());
        assert!(solve_affinity_column(&g, &[1.0, 0.0], 1.0, 1e-9, 10).is_err());
        assert!(solve_affinity_column(&g, &[1.0, 0.0], 0.2, 0.0, 10).is_err());
        assert!(solve_affinity_column(&g, &[1.0], 0.2, 1e-9, 10).is_err());
        assert!(solve_affinity_column(&g, &[f64::NAN, 0.0], 0.2, 1e-9, 10).is_err());
    }

    #[test]
    fn full_cap_is_enforced() {
        let g = Graph::empty(11);
        let cfg = SolverConfig {
            full_cap: 10,
            ..SolverConfig::default()
        };
        assert!(matches!(
            full_affinity(&g, 0.5, &cfg),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn partition_examples() {
        let p = random_partition(10, 10, 3).unwrap();
        let mut sorted = p.assignment().to_vec();
        sorted.sort();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());

        let p = random_partition(10, 1, 3).unwrap();
        assert!(p.assignment().iter().all(|&a| a == 0));

        assert_eq!(
            random_partition(100, 5, 7).unwrap(),
            random_partition(100, 5, 7).unwrap()
        );
        assert!(random_partition(5, 6, 0).is_err());
        assert!(random_partition(5, 0, 0).is_err());
    }

    #[test]
    fn partitions_never_have_empty_groups() {
        for (n, g) in [(10, 9), (50, 40), (100, 100), (7, 3), (1000, 5)] {
            for seed in 0..5 {
                let p = random_partition(n, g, seed).unwrap();
                for k in 0..g {
                    assert!(p.members(k).next().is_some(), "n={n} g={g} seed={seed}");
                }
            }
        }
    }

    #[test]
    fn empty_graph_reduced_columns_are_indicators() {
        let p = random_partition(12, 4, 1).unwrap();
        let s = reduced_affinity(&Graph::empty(12), &p, 0.5, &SolverConfig::default()).unwrap();
        for k in 0..4 {
            assert_eq!(s.column(k), p.seed_vector(k).as_slice());
        }
    }

    #[test]
    fn csv_dump_layout() {
        let s = full_affinity(&Graph::empty(2), 0.5, &SolverConfig::default()).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,cols,epsilon\n2,2,0.5\n1,0\n0,1\n"
        );
    }

    #[test]
    fn blocked_columns_match_single_solves() {
        let g =
            Graph::unweighted(7, [(0, 1), (1, 2), (2, 3), (3, 0), (3, 4), (4, 5), (5, 6)]).unwrap();
        let eps = crate::graph::epsilon(&g);
        let seeds: Vec<Vec<f64>> = (0..7)
            .map(|i| {
                (0..7)
                    .map(|j| if j == i || j == (i + 3) % 7 { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        let together = solve_columns(&g, &seeds, eps, 1e-10, 1000).unwrap();
        for (seed, col) in seeds.iter().zip(&together) {
            let alone = solve_column(&g, seed, eps, 1e-10, 1000).unwrap();
            assert_eq!(alone, *col);
        }
    }
}
