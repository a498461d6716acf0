//! DeltaCon0 and DeltaCon similarity scores.
//!
//! Both compare the affinity matrices of two graphs with the root euclidean
//! (Matusita) distance and map the distance to `1 / (1 + d)`. DeltaCon0 uses
//! the full `n x n` matrices; DeltaCon seeds the solver with `g` random node
//! groups and compares `n x g` matrices, which upper-bounds the exact score.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affinity::{
    full_affinity, random_partition, reduced_affinity, AffinityMatrix, Partition, SolverConfig,
};
use crate::error::{Error, Result};
use crate::graph::{shared_epsilon, union_node_space, union_node_space_all, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "DC0")]
    Dc0,
    #[serde(rename = "DC")]
    Dc,
    #[serde(rename = "VEO")]
    Veo,
    #[serde(rename = "GED")]
    Ged,
    #[serde(rename = "LAMBDA_ADJ")]
    LambdaAdj,
    #[serde(rename = "LAMBDA_LAP")]
    LambdaLap,
    #[serde(rename = "LAMBDA_NL")]
    LambdaNl,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Dc0,
        Method::Dc,
        Method::Veo,
        Method::Ged,
        Method::LambdaAdj,
        Method::LambdaLap,
        Method::LambdaNl,
    ];

    /// Tag used in JSON records.
    pub fn tag(self) -> &'static str {
        match self {
            Method::Dc0 => "DC0",
            Method::Dc => "DC",
            Method::Veo => "VEO",
            Method::Ged => "GED",
            Method::LambdaAdj => "LAMBDA_ADJ",
            Method::LambdaLap => "LAMBDA_LAP",
            Method::LambdaNl => "LAMBDA_NL",
        }
    }

    /// Name accepted on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            Method::Dc0 => "dc0",
            Method::Dc => "dc",
            Method::Veo => "veo",
            Method::Ged => "ged",
            Method::LambdaAdj => "lambda-adj",
            Method::LambdaLap => "lambda-lap",
            Method::LambdaNl => "lambda-nl",
        }
    }

    /// True for methods that report a similarity, false for pure distances.
    pub fn is_similarity(self) -> bool {
        matches!(self, Method::Dc0 | Method::Dc | Method::Veo)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.cli_name() == lower || m.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::validation(format!("unknown method `{s}`")))
    }
}

/// One comparison, serialized as the JSON result record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResult {
    pub method: Method,
    pub distance: Option<f64>,
    pub similarity: Option<f64>,
    pub epsilon: Option<f64>,
    pub g: Option<usize>,
    pub seed: Option<u64>,
    pub runtime_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Set by multi-seed runs: the seeds used and the spread of the scores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity_std: Option<f64>,
}

impl SimilarityResult {
    pub(crate) fn new(method: Method) -> Self {
        Self {
            method,
            distance: None,
            similarity: None,
            epsilon: None,
            g: None,
            seed: None,
            runtime_ms: 0.0,
            tol: None,
            seeds: None,
            similarity_std: None,
        }
    }

    /// The similarity if the method reports one, else the distance.
    pub fn score(&self) -> f64 {
        self.similarity
            .or(self.distance)
            .expect("every result carries a similarity or a distance")
    }
}

/// Tuning shared by both DeltaCon variants.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DeltaConOptions {
    /// Overrides the shared `1 / (1 + max degree)` epsilon.
    pub epsilon: Option<f64>,
    pub solver: SolverConfig,
}

/// Which DeltaCon to run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Exact,
    /// Randomized grouping, averaged over one run per seed.
    Grouped {
        groups: usize,
        seeds: Vec<u64>,
    },
}

impl Variant {
    pub fn grouped(groups: usize, seeds: impl IntoIterator<Item = u64>) -> Self {
        Variant::Grouped {
            groups,
            seeds: seeds.into_iter().collect(),
        }
    }
}

/// Root euclidean distance `sqrt(sum (sqrt(a_ij) - sqrt(b_ij))^2)`.
///
/// Negative entries, which only appear as solver round-off, count as zero.
pub fn rooted(m1: &AffinityMatrix, m2: &AffinityMatrix) -> Result<f64> {
    if m1.rows() != m2.rows() || m1.cols() != m2.cols() || m1.kind != m2.kind {
        return Err(Error::validation(format!(
            "cannot compare a {}x{} {:?} matrix with a {}x{} {:?} matrix",
            m1.rows(),
            m1.cols(),
            m1.kind,
            m2.rows(),
            m2.cols(),
            m2.kind
        )));
    }
    Ok(rooted_slices(m1.values(), m2.values()))
}

pub(crate) fn rooted_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let diff = x.max(0.0).sqrt() - y.max(0.0).sqrt();
            diff * diff
        })
        .sum::<f64>()
        .sqrt()
}

pub fn sim_from_distance(d: f64) -> Result<f64> {
    if d.is_nan() || d < 0.0 {
        return Err(Error::validation(format!(
            "distance must be non-negative, got {d}"
        )));
    }
    Ok(1.0 / (1.0 + d))
}

/// Inverse of [`sim_from_distance`] on `(0, 1]`.
pub fn distance_from_sim(s: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::validation(format!(
            "similarity must lie in (0, 1], got {s}"
        )));
    }
    Ok(1.0 / s - 1.0)
}

fn resolve_epsilon(g1: &Graph, g2: &Graph, opts: &DeltaConOptions) -> Result<f64> {
    let eps = opts.epsilon.unwrap_or_else(|| shared_epsilon([g1, g2]));
    if eps > 0.0 && eps < 1.0 {
        Ok(eps)
    } else {
        Err(Error::validation(format!(
            "epsilon must lie in (0, 1), got {eps}"
        )))
    }
}

fn aligned(g1: &Graph, g2: &Graph) -> (Graph, Graph) {
    union_node_space(g1, g2)
}

pub fn deltacon0(g1: &Graph, g2: &Graph) -> Result<SimilarityResult> {
    deltacon0_with(g1, g2, &DeltaConOptions::default())
}

pub fn deltacon0_with(g1: &Graph, g2: &Graph, opts: &DeltaConOptions) -> Result<SimilarityResult> {
    let start = Instant::now();
    let (g1, g2) = aligned(g1, g2);
    let eps = resolve_epsilon(&g1, &g2, opts)?;
    let (s1, s2) = rayon::join(
        || full_affinity(&g1, eps, &opts.solver),
        || full_affinity(&g2, eps, &opts.solver),
    );
    let d = rooted(&s1?, &s2?)?;
    Ok(SimilarityResult {
        distance: Some(d),
        similarity: Some(sim_from_distance(d)?),
        epsilon: Some(eps),
        tol: Some(opts.solver.tol),
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        ..SimilarityResult::new(Method::Dc0)
    })
}

pub fn deltacon(g1: &Graph, g2: &Graph, groups: usize, rng_seed: u64) -> Result<SimilarityResult> {
    deltacon_with(g1, g2, groups, rng_seed, &DeltaConOptions::default())
}

/// DeltaCon with one partition, drawn from `rng_seed` and shared by both
/// graphs.
pub fn deltacon_with(
    g1: &Graph,
    g2: &Graph,
    groups: usize,
    rng_seed: u64,
    opts: &DeltaConOptions,
) -> Result<SimilarityResult> {
    let start = Instant::now();
    let (g1, g2) = aligned(g1, g2);
    let partition = random_partition(g1.node_count(), groups, rng_seed)?;
    let mut res = deltacon_partition(&g1, &g2, &partition, opts)?;
    res.seed = Some(rng_seed);
    res.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(res)
}

/// DeltaCon with a caller-supplied partition. The graphs must already share
/// a node set of the partition's size.
pub fn deltacon_partition(
    g1: &Graph,
    g2: &Graph,
    partition: &Partition,
    opts: &DeltaConOptions,
) -> Result<SimilarityResult> {
    let start = Instant::now();
    if g1.node_count() != g2.node_count() {
        return Err(Error::validation("graphs must share a node set"));
    }
    let eps = resolve_epsilon(g1, g2, opts)?;
    let (s1, s2) = rayon::join(
        || reduced_affinity(g1, partition, eps, &opts.solver),
        || reduced_affinity(g2, partition, eps, &opts.solver),
    );
    let d = rooted(&s1?, &s2?)?;
    Ok(SimilarityResult {
        distance: Some(d),
        similarity: Some(sim_from_distance(d)?),
        epsilon: Some(eps),
        g: Some(partition.groups()),
        seed: partition.rng_seed,
        tol: Some(opts.solver.tol),
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        ..SimilarityResult::new(Method::Dc)
    })
}

/// Mean DeltaCon similarity over several partition seeds.
///
/// `similarity` is the mean score and `similarity_std` its population
/// standard deviation; `distance` is the distance that maps to the mean
/// similarity, so the record still satisfies `s = 1 / (1 + d)`.
pub fn deltacon_mean(
    g1: &Graph,
    g2: &Graph,
    groups: usize,
    seeds: &[u64],
    opts: &DeltaConOptions,
) -> Result<SimilarityResult> {
    if seeds.is_empty() {
        return Err(Error::validation("at least one seed is required"));
    }
    let start = Instant::now();
    let (g1, g2) = aligned(g1, g2);
    let sims = seeds
        .iter()
        .map(|&s| {
            let p = random_partition(g1.node_count(), groups, s)?;
            deltacon_partition(&g1, &g2, &p, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = sims.iter().map(SimilarityResult::score).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    Ok(SimilarityResult {
        distance: Some(distance_from_sim(mean)?),
        similarity: Some(mean),
        similarity_std: Some(var.sqrt()),
        epsilon: sims[0].epsilon,
        g: Some(groups),
        seed: seeds.first().copied(),
        seeds: Some(seeds.to_vec()),
        tol: Some(opts.solver.tol),
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        ..SimilarityResult::new(Method::Dc)
    })
}

/// Runs either variant.
pub fn similarity(
    g1: &Graph,
    g2: &Graph,
    variant: &Variant,
    opts: &DeltaConOptions,
) -> Result<SimilarityResult> {
    match variant {
        Variant::Exact => deltacon0_with(g1, g2, opts),
        Variant::Grouped { groups, seeds } if seeds.len() == 1 => {
            deltacon_with(g1, g2, *groups, seeds[0], opts)
        }
        Variant::Grouped { groups, seeds } => deltacon_mean(g1, g2, *groups, seeds, opts),
    }
}

/// Affinity matrices of one graph in a collection: a single full matrix for
/// [`Variant::Exact`], one reduced matrix per seed for [`Variant::Grouped`].
#[derive(Debug, Clone)]
pub struct Signature {
    matrices: Vec<AffinityMatrix>,
}

impl Signature {
    pub fn matrices(&self) -> &[AffinityMatrix] {
        &self.matrices
    }

    /// Similarity to another signature of the same collection, averaged over
    /// seeds.
    pub fn similarity(&self, other: &Signature) -> Result<f64> {
        if self.matrices.len() != other.matrices.len() {
            return Err(Error::validation("signatures come from different variants"));
        }
        let mut total = 0.0;
        for (a, b) in self.matrices.iter().zip(&other.matrices) {
            total += sim_from_distance(rooted(a, b)?)?;
        }
        Ok(total / self.matrices.len() as f64)
    }
}

/// Signatures for a whole collection on its union node set, with one
/// epsilon taken over every graph so all pairwise scores share a scale.
/// Grouped variants reuse the same partitions for every graph.
pub fn signatures(
    graphs: &[Graph],
    variant: &Variant,
    opts: &DeltaConOptions,
) -> Result<Vec<Signature>> {
    if graphs.is_empty() {
        return Ok(Vec::new());
    }
    let graphs = union_node_space_all(graphs);
    let n = graphs[0].node_count();
    let eps = opts
        .epsilon
        .unwrap_or_else(|| shared_epsilon(graphs.iter()));
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::validation(format!(
            "epsilon must lie in (0, 1), got {eps}"
        )));
    }
    let partitions = match variant {
        Variant::Exact => None,
        Variant::Grouped { groups, seeds } => {
            if seeds.is_empty() {
                return Err(Error::validation("at least one seed is required"));
            }
            Some(
                seeds
                    .iter()
                    .map(|&s| random_partition(n, *groups, s))
                    .collect::<Result<Vec<_>>>()?,
            )
        }
    };
    graphs
        .par_iter()
        .map(|g| {
            let matrices = match &partitions {
                None => vec![full_affinity(g, eps, &opts.solver)?],
                Some(ps) => ps
                    .iter()
                    .map(|p| reduced_affinity(g, p, eps, &opts.solver))
                    .collect::<Result<Vec<_>>>()?,
            };
            Ok(Signature { matrices })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affinity::AffinityKind;

    fn dense(rows: usize, cols: usize, values: Vec<f64>) -> AffinityMatrix {
        AffinityMatrix::from_values(rows, cols, values, AffinityKind::Full, 0.5).unwrap()
    }

    #[test]
    fn rooted_examples() {
        let id = dense(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(rooted(&id, &id).unwrap(), 0.0);
        let z = dense(2, 2, vec![0.0; 4]);
        assert!((rooted(&id, &z).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rooted_rejects_shape_mismatch() {
        let a = full_affinity(&Graph::empty(2), 0.5, &SolverConfig::default()).unwrap();
        let b = full_affinity(&Graph::empty(3), 0.5, &SolverConfig::default()).unwrap();
        assert!(rooted(&a, &b).is_err());
    }

    #[test]
    fn rooted_clamps_negative_noise() {
        assert_eq!(rooted_slices(&[-1e-16, 1.0], &[0.0, 1.0]), 0.0);
    }

    #[test]
    fn sim_from_distance_examples() {
        assert_eq!(sim_from_distance(0.0).unwrap(), 1.0);
        assert_eq!(sim_from_distance(1.0).unwrap(), 0.5);
        assert_eq!(sim_from_distance(9.0).unwrap(), 0.1);
        assert!(sim_from_distance(-1.0).is_err());
        assert!(sim_from_distance(f64::NAN).is_err());
    }

    #[test]
    fn method_names_roundtrip() {
        for m in Method::ALL {
            assert_eq!(m.cli_name().parse::<Method>().unwrap(), m);
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
        }
        assert!("signature".parse::<Method>().is_err());
    }
}
