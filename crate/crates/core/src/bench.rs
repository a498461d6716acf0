//! Wall-clock scaling of DeltaCon on seeded random graphs.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::deltacon::deltacon;
use crate::error::{Error, Result};
use crate::generate::{random_graph, remove_edges_random};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub edge_counts: Vec<usize>,
    /// Node count is chosen so the average degree is close to this.
    pub mean_degree: f64,
    pub groups: usize,
    pub seed: u64,
    /// Each size is timed this many times and the fastest run is kept.
    pub repeats: usize,
    /// Run on a dedicated pool of this many workers instead of the global one.
    pub threads: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            edge_counts: doubling(14, 20),
            mean_degree: 10.0,
            groups: 5,
            seed: 0,
            repeats: 3,
            threads: None,
        }
    }
}

/// `2^lo, 2^(lo+1), …, 2^hi`.
pub fn doubling(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|e| 1usize << e).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub edges: usize,
    pub nodes: usize,
    pub groups: usize,
    pub runtime_ms: f64,
}

/// Times one DeltaCon call per size, comparing a random graph with a copy
/// that lost 1% of its edges.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if !(cfg.mean_degree > 0.0) || cfg.repeats == 0 {
        return Err(Error::validation(
            "mean degree and repeats must be positive",
        ));
    }
    match cfg.threads {
        None => bench_sizes(cfg),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::validation(format!("cannot start {t} workers: {e}")))?
            .install(|| bench_sizes(cfg)),
    }
}

fn bench_sizes(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(cfg.edge_counts.len());
    for &m in &cfg.edge_counts {
        let n = ((2.0 * m as f64 / cfg.mean_degree).round() as usize).max(2);
        let g1 = random_graph(n, m, cfg.seed)?;
        let g2 = remove_edges_random(&g1, 0.01, cfg.seed.wrapping_add(1))?;
        let groups = cfg.groups.min(n);
        let mut best = f64::INFINITY;
        for _ in 0..cfg.repeats {
            let start = Instant::now();
            deltacon(&g1, &g2, groups, cfg.seed)?;
            best = best.min(start.elapsed().as_secs_f64() * 1e3);
        }
        rows.push(BenchRow {
            edges: m,
            nodes: n,
            groups,
            runtime_ms: best,
        });
    }
    Ok(rows)
}

pub fn write_csv(rows: &[BenchRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "edges,nodes,groups,runtime_ms")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.3}",
            r.edges, r.nodes, r.groups, r.runtime_ms
        )?;
    }
    Ok(())
}
