//! Executable checks of what a graph similarity measure should satisfy.
//!
//! Each [`PropertyCase`] names three or four small graphs. For edge
//! importance the pairs are (A, B) and (A, C); for weight awareness and
//! edge submodularity they are (A, B) and (C, D). The first pair is the one
//! that should look more alike, so a positive delta means the property
//! holds: `sim(first) - sim(second)` for similarity measures and
//! `d(second) - d(first)` for distances.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::baselines::{ged, lambda_distance, veo};
use crate::deltacon::{deltacon0_with, deltacon_mean, DeltaConOptions, Method, SimilarityResult};
use crate::error::{Error, Result};
use crate::generate::{generate_named, remove_edges_random, remove_edges_targeted};
use crate::graph::{Graph, MatrixKind};

/// Seed for the random edge removals in the battery. With it, `mB10` loses
/// a clique edge away from both connector endpoints.
pub const BATTERY_SEED: u64 = 0;

pub const DEFAULT_GROUPS: usize = 5;
pub const DEFAULT_SEED_COUNT: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Property {
    /// Changes that disconnect the graph cost more.
    EdgeImportance,
    /// Removing a heavier edge costs more.
    WeightAwareness,
    /// The same change matters more in a sparser graph.
    EdgeSubmodularity,
}

impl Property {
    pub fn label(self) -> &'static str {
        match self {
            Property::EdgeImportance => "P1 edge importance",
            Property::WeightAwareness => "P2 weight awareness",
            Property::EdgeSubmodularity => "P3 edge submodularity",
        }
    }

    fn arity(self) -> usize {
        match self {
            Property::EdgeImportance => 3,
            _ => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCase {
    pub property: Property,
    pub graphs: Vec<String>,
    pub seed: u64,
}

impl PropertyCase {
    pub fn new(property: Property, graphs: &[&str], seed: u64) -> Result<Self> {
        if graphs.len() != property.arity() {
            return Err(Error::validation(format!(
                "{} needs {} graphs, got {}",
                property.label(),
                property.arity(),
                graphs.len()
            )));
        }
        for g in graphs {
            g.parse::<crate::generate::TopologySpec>()?;
        }
        Ok(Self {
            property,
            graphs: graphs.iter().map(|s| s.to_string()).collect(),
            seed,
        })
    }

    /// The two pairs being compared, as indices into `graphs`.
    pub fn pairs(&self) -> [(usize, usize); 2] {
        match self.property {
            Property::EdgeImportance => [(0, 1), (0, 2)],
            _ => [(0, 1), (2, 3)],
        }
    }

    pub fn label(&self) -> String {
        self.graphs.join(" ")
    }
}

/// The standard battery over barbells, lollipops, wheel-barbells and the
/// basic families.
pub fn battery(seed: u64) -> Vec<PropertyCase> {
    use Property::*;
    let rows: &[(Property, &[&str])] = &[
        (EdgeImportance, &["B10", "mB10", "mmB10"]),
        (EdgeImportance, &["L10", "mL10", "mmL10"]),
        (EdgeImportance, &["WhB10", "mWhB10", "mmWhB10"]),
        (EdgeImportance, &["WhB10", "m2WhB10", "mm2WhB10"]),
        (WeightAwareness, &["B10", "mB10", "B10", "w5B10"]),
        (WeightAwareness, &["mmB10", "B10", "mmB10", "w5B10"]),
        (WeightAwareness, &["B10", "mB10", "w5B10", "w2B10"]),
        (WeightAwareness, &["w5B10", "w2B10", "w5B10", "mmB10"]),
        (WeightAwareness, &["w5B10", "w2B10", "w5B10", "B10"]),
        (EdgeSubmodularity, &["K5", "mK5", "C5", "mC5"]),
        (EdgeSubmodularity, &["C5", "mC5", "P5", "mP5"]),
        (EdgeSubmodularity, &["P5", "mP5", "S5", "mS5"]),
        (EdgeSubmodularity, &["K100", "mK100", "C100", "mC100"]),
        (EdgeSubmodularity, &["C100", "mC100", "P100", "mP100"]),
        (EdgeSubmodularity, &["P100", "mP100", "S100", "mS100"]),
        (EdgeSubmodularity, &["K100", "m10K100", "C100", "m10C100"]),
        (EdgeSubmodularity, &["C100", "m10C100", "P100", "m10P100"]),
        (EdgeSubmodularity, &["P100", "m10P100", "S100", "m10S100"]),
    ];
    rows.iter()
        .map(|(p, g)| PropertyCase::new(*p, g, seed).expect("battery names are valid"))
        .collect()
}

/// A measure plus the settings it runs with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparator {
    pub method: Method,
    /// Group count and partition seeds for [`Method::Dc`].
    pub groups: usize,
    pub seeds: Vec<u64>,
    pub options: DeltaConOptions,
}

impl Comparator {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            groups: DEFAULT_GROUPS,
            seeds: (0..DEFAULT_SEED_COUNT).collect(),
            options: DeltaConOptions::default(),
        }
    }

    /// The full result record for one pair.
    pub fn compare(&self, g1: &Graph, g2: &Graph) -> Result<SimilarityResult> {
        match self.method {
            Method::Dc0 => deltacon0_with(g1, g2, &self.options),
            Method::Dc => {
                let groups = self.groups.min(g1.node_count().max(g2.node_count()));
                deltacon_mean(g1, g2, groups, &self.seeds, &self.options)
            }
            Method::Veo => Ok(veo(g1, g2)),
            Method::Ged => Ok(ged(g1, g2)),
            Method::LambdaAdj => lambda_distance(g1, g2, MatrixKind::Adjacency),
            Method::LambdaLap => lambda_distance(g1, g2, MatrixKind::Laplacian),
            Method::LambdaNl => lambda_distance(g1, g2, MatrixKind::NormalizedLaplacian),
        }
    }

    /// Similarity for similarity measures, distance for the others.
    pub fn score(&self, g1: &Graph, g2: &Graph) -> Result<f64> {
        self.compare(g1, g2).map(|r| r.score())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub case: PropertyCase,
    pub method: Method,
    /// Scores of the first and second pair.
    pub first: f64,
    pub second: f64,
    pub delta: f64,
    pub holds: bool,
}

pub fn run_case(case: &PropertyCase, cmp: &Comparator) -> Result<CaseOutcome> {
    let graphs = case
        .graphs
        .iter()
        .map(|name| generate_named(name, case.seed))
        .collect::<Result<Vec<_>>>()?;
    let [(a, b), (c, d)] = case.pairs();
    let first = cmp.score(&graphs[a], &graphs[b])?;
    let second = cmp.score(&graphs[c], &graphs[d])?;
    let delta = if cmp.method.is_similarity() {
        first - second
    } else {
        second - first
    };
    Ok(CaseOutcome {
        case: case.clone(),
        method: cmp.method,
        first,
        second,
        delta,
        holds: delta > 0.0,
    })
}

pub fn run_battery(cases: &[PropertyCase], cmp: &Comparator) -> Result<Vec<CaseOutcome>> {
    cases.iter().map(|c| run_case(c, cmp)).collect()
}

/// One markdown table per property, in battery order.
pub fn render_markdown(outcomes: &[CaseOutcome]) -> String {
    let mut out = String::new();
    let mut current: Option<Property> = None;
    for o in outcomes {
        if current != Some(o.case.property) {
            current = Some(o.case.property);
            let arity = o.case.property.arity();
            let delta = if o.method.is_similarity() {
                "Δs"
            } else {
                "Δd"
            };
            if !out.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(
                out,
                "### {} ({})\n",
                o.case.property.label(),
                o.method.tag()
            );
            let cols = &["A", "B", "C", "D"][..arity];
            let _ = writeln!(out, "| {} | {delta} | holds |", cols.join(" | "));
            let _ = writeln!(out, "|{}---|---|", "---|".repeat(arity));
        }
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            o.case.graphs.join(" | "),
            format_delta(o.delta),
            if o.holds { "yes" } else { "**no**" }
        );
    }
    out
}

fn format_delta(d: f64) -> String {
    if d == 0.0 {
        "0".to_string()
    } else if d.abs() >= 0.01 {
        format!("{d:.4}")
    } else {
        format!("{d:.3e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P4Point {
    pub fraction: f64,
    pub sim_random: f64,
    pub sim_targeted: f64,
}

impl P4Point {
    pub fn gap(&self) -> f64 {
        self.sim_random - self.sim_targeted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P4Report {
    pub method: Method,
    pub points: Vec<P4Point>,
    /// Random removal never looks worse than targeted removal.
    pub above_diagonal: bool,
    /// The gap at the largest fraction is no larger than at the smallest.
    pub converges: bool,
}

/// Random versus targeted removal of the same number of edges, averaged
/// over `removal_seeds` at every fraction.
pub fn run_p4(
    g: &Graph,
    fractions: &[f64],
    cmp: &Comparator,
    removal_seeds: &[u64],
) -> Result<P4Report> {
    if !cmp.method.is_similarity() {
        return Err(Error::validation(format!(
            "{} is a distance; the removal comparison needs a similarity",
            cmp.method.tag()
        )));
    }
    if fractions.is_empty() || removal_seeds.is_empty() {
        return Err(Error::validation("need at least one fraction and one seed"));
    }
    let mut points = Vec::with_capacity(fractions.len());
    for &f in fractions {
        let (mut r, mut t) = (0.0, 0.0);
        for &s in removal_seeds {
            r += cmp.score(g, &remove_edges_random(g, f, s)?)?;
            t += cmp.score(g, &remove_edges_targeted(g, f, s)?)?;
        }
        let k = removal_seeds.len() as f64;
        points.push(P4Point {
            fraction: f,
            sim_random: r / k,
            sim_targeted: t / k,
        });
    }
    let above_diagonal = points.iter().all(|p| p.sim_random >= p.sim_targeted);
    let converges = points.last().unwrap().gap() <= points[0].gap();
    Ok(P4Report {
        method: cmp.method,
        points,
        above_diagonal,
        converges,
    })
}
