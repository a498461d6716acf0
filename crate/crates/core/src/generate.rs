//! Small named topologies and the edge-mutation operators used by the
//! experiments.
//!
//! Names follow a compact grammar: an optional `m`/`mm` prefix with an
//! optional count, an optional `w<weight>`, a family letter and a size.
//! `m10K100` is a 100-clique missing ten random edges, `mm2WhB10` a
//! wheel-barbell missing both connectors, `w5B10` a barbell whose connector
//! weighs 5.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Clique,
    Path,
    Cycle,
    Star,
    Lollipop,
    Barbell,
    WheelBarbell,
}

impl Family {
    pub fn symbol(self) -> &'static str {
        match self {
            Family::Clique => "K",
            Family::Path => "P",
            Family::Cycle => "C",
            Family::Star => "S",
            Family::Lollipop => "L",
            Family::Barbell => "B",
            Family::WheelBarbell => "WhB",
        }
    }

    fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "K" => Family::Clique,
            "P" => Family::Path,
            "C" => Family::Cycle,
            "S" => Family::Star,
            "L" => Family::Lollipop,
            "B" => Family::Barbell,
            "WhB" => Family::WheelBarbell,
            _ => return None,
        })
    }

    pub fn min_size(self) -> usize {
        match self {
            Family::Clique => 1,
            Family::Path | Family::Star => 2,
            Family::Cycle => 3,
            Family::Lollipop | Family::Barbell => 4,
            Family::WheelBarbell => 8,
        }
    }

    /// Families with designated connector edges between their two parts.
    pub fn has_connectors(self) -> bool {
        matches!(
            self,
            Family::Lollipop | Family::Barbell | Family::WheelBarbell
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mutation {
    /// Remove this many random edges that are neither connectors nor bridges.
    RemoveRandomEdges(usize),
    /// Remove this many connector edges, in construction order.
    RemoveConnectors(usize),
    SetConnectorWeight(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub family: Family,
    pub n: usize,
    pub mutations: Vec<Mutation>,
}

impl TopologySpec {
    pub fn new(family: Family, n: usize) -> Self {
        Self {
            family,
            n,
            mutations: Vec::new(),
        }
    }

    pub fn with(mut self, m: Mutation) -> Self {
        self.mutations.push(m);
        self
    }
}

fn name_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?:(mm|m)(\d*))?(?:w(\d+(?:\.\d+)?))?(K|P|C|S|L|B|WhB)(\d+)$").unwrap()
    })
}

impl FromStr for TopologySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let caps = name_regex()
            .captures(s.trim())
            .ok_or_else(|| Error::validation(format!("unrecognised graph name {s:?}")))?;
        let family = Family::from_symbol(&caps[4]).unwrap();
        let n: usize = caps[5]
            .parse()
            .map_err(|_| Error::validation(format!("bad size in {s:?}")))?;
        let mut spec = TopologySpec::new(family, n);
        if let Some(w) = caps.get(3) {
            let w: f64 = w
                .as_str()
                .parse()
                .map_err(|_| Error::validation(format!("bad weight in {s:?}")))?;
            spec.mutations.push(Mutation::SetConnectorWeight(w));
        }
        if let Some(prefix) = caps.get(1) {
            let count = match caps.get(2).map(|c| c.as_str()) {
                Some("") | None => 1,
                Some(c) => c
                    .parse()
                    .map_err(|_| Error::validation(format!("bad count in {s:?}")))?,
            };
            spec.mutations.push(match prefix.as_str() {
                "mm" => Mutation::RemoveConnectors(count),
                _ => Mutation::RemoveRandomEdges(count),
            });
        }
        Ok(spec)
    }
}

fn fmt_count(f: &mut fmt::Formatter<'_>, prefix: &str, x: usize) -> fmt::Result {
    if x == 1 {
        write!(f, "{prefix}")
    } else {
        write!(f, "{prefix}{x}")
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.mutations {
            match *m {
                Mutation::RemoveConnectors(x) => fmt_count(f, "mm", x)?,
                Mutation::RemoveRandomEdges(x) => fmt_count(f, "m", x)?,
                Mutation::SetConnectorWeight(_) => {}
            }
        }
        for m in &self.mutations {
            if let Mutation::SetConnectorWeight(w) = *m {
                write!(f, "w{w}")?;
            }
        }
        write!(f, "{}{}", self.family.symbol(), self.n)
    }
}

fn clique_edges(nodes: std::ops::Range<usize>, out: &mut Vec<(usize, usize)>) {
    for u in nodes.clone() {
        for v in u + 1..nodes.end {
            out.push((u, v));
        }
    }
}

fn wheel_edges(hub: usize, rim: std::ops::Range<usize>, out: &mut Vec<(usize, usize)>) {
    let rim: Vec<usize> = rim.collect();
    for &r in &rim {
        out.push((hub, r));
    }
    for i in 0..rim.len() {
        let (a, b) = (rim[i], rim[(i + 1) % rim.len()]);
        out.push((a.min(b), a.max(b)));
    }
}

/// Unweighted base topology and its connector edges.
fn base_topology(family: Family, n: usize) -> Result<(Vec<(usize, usize)>, Vec<(usize, usize)>)> {
    if n < family.min_size() {
        return Err(Error::validation(format!(
            "{}{n} needs at least {} nodes",
            family.symbol(),
            family.min_size()
        )));
    }
    let h = n / 2;
    let mut edges = Vec::new();
    let connectors = match family {
        Family::Clique => {
            clique_edges(0..n, &mut edges);
            vec![]
        }
        Family::Path => {
            edges.extend((0..n - 1).map(|i| (i, i + 1)));
            vec![]
        }
        Family::Cycle => {
            edges.extend((0..n - 1).map(|i| (i, i + 1)));
            edges.push((0, n - 1));
            vec![]
        }
        Family::Star => {
            edges.extend((1..n).map(|i| (0, i)));
            vec![]
        }
        Family::Lollipop => {
            clique_edges(0..h, &mut edges);
            edges.extend((h - 1..n - 1).map(|i| (i, i + 1)));
            vec![(h - 1, h)]
        }
        Family::Barbell => {
            clique_edges(0..h, &mut edges);
            clique_edges(h..n, &mut edges);
            edges.push((h - 1, h));
            vec![(h - 1, h)]
        }
        Family::WheelBarbell => {
            wheel_edges(0, 1..h, &mut edges);
            wheel_edges(h, h + 1..n, &mut edges);
            let c = vec![(0, h), (1, h + 1)];
            edges.extend(c.iter().copied());
            c
        }
    };
    Ok((edges, connectors))
}

/// Builds the named topology. Only `m` removals consume randomness.
pub fn generate(spec: &TopologySpec, seed: u64) -> Result<Graph> {
    let (pairs, connectors) = base_topology(spec.family, spec.n)?;
    let mut g = Graph::unweighted(spec.n, pairs)?;
    let is_connector = |e: &Edge| connectors.contains(&(e.u, e.v));
    let mut r = rng(seed);
    let mut removed_connectors = 0usize;

    for m in &spec.mutations {
        match *m {
            Mutation::SetConnectorWeight(w) => {
                if !spec.family.has_connectors() {
                    return Err(Error::validation(format!(
                        "{} has no connector edge to weight",
                        spec.family.symbol()
                    )));
                }
                g = g.map_weights(|e| if is_connector(e) { w } else { e.weight })?;
            }
            Mutation::RemoveConnectors(x) => {
                let available = connectors.len() - removed_connectors;
                if x > available {
                    return Err(Error::validation(format!(
                        "{}{} has {available} connector edge(s), cannot remove {x}",
                        spec.family.symbol(),
                        spec.n
                    )));
                }
                let drop: HashSet<(usize, usize)> = connectors
                    [removed_connectors..removed_connectors + x]
                    .iter()
                    .copied()
                    .collect();
                removed_connectors += x;
                g = g.filter_edges(|e| !drop.contains(&(e.u, e.v)));
            }
            Mutation::RemoveRandomEdges(x) => {
                for _ in 0..x {
                    let candidates: Vec<(usize, usize)> = if spec.family.has_connectors() {
                        let b: HashSet<(usize, usize)> = bridges(&g).into_iter().collect();
                        g.edges()
                            .iter()
                            .filter(|e| !is_connector(e) && !b.contains(&(e.u, e.v)))
                            .map(|e| (e.u, e.v))
                            .collect()
                    } else {
                        g.edges().iter().map(|e| (e.u, e.v)).collect()
                    };
                    if candidates.is_empty() {
                        return Err(Error::validation(format!(
                            "{spec} asks for more removable edges than the graph has"
                        )));
                    }
                    let pick = candidates[r.gen_range(0..candidates.len())];
                    g = g.filter_edges(|e| (e.u, e.v) != pick);
                }
            }
        }
    }
    Ok(g)
}

/// Parses a name and builds it.
pub fn generate_named(name: &str, seed: u64) -> Result<Graph> {
    generate(&name.parse()?, seed)
}

/// Edges whose removal increases the number of connected components,
/// as canonical `(u, v)` pairs in edge-list order.
pub fn bridges(g: &Graph) -> Vec<(usize, usize)> {
    let n = g.node_count();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut out = HashSet::new();
    let mut timer = 0;
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|u| g.neighbors(u).map(|(v, _)| v).collect())
        .collect();

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (node, parent, next neighbor index)
        let mut stack = vec![(root, usize::MAX, 0usize)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (u, parent, ref mut i)) = stack.last_mut() {
            if *i < adj[u].len() {
                let v = adj[u][*i];
                *i += 1;
                if v == parent {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, u, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if parent != usize::MAX {
                    low[parent] = low[parent].min(low[u]);
                    if low[u] > disc[parent] {
                        out.insert((parent.min(u), parent.max(u)));
                    }
                }
            }
        }
    }
    g.edges()
        .iter()
        .map(|e| (e.u, e.v))
        .filter(|p| out.contains(p))
        .collect()
}

/// Decodes index `i` of the upper-triangle pair enumeration
/// (0,1), (0,2), …, (0,n-1), (1,2), …
fn pair_at(row_starts: &[usize], i: usize) -> (usize, usize) {
    let u = row_starts.partition_point(|&s| s <= i) - 1;
    (u, u + 1 + (i - row_starts[u]))
}

/// The node pairs flipped by [`corrupt_percent`], in draw order.
///
/// The draw depends only on `n` and `seed`, so a larger `p` extends the
/// flip set of a smaller one.
pub fn corruption_flips(n: usize, p: f64, seed: u64) -> Result<Vec<(usize, usize)>> {
    if !(p > 0.0 && p <= 100.0) {
        return Err(Error::validation(format!(
            "corruption percent {p} not in (0, 100]"
        )));
    }
    let total = n * n.saturating_sub(1) / 2;
    let k = ((p / 100.0) * total as f64).round() as usize;
    let row_starts: Vec<usize> = (0..n)
        .scan(0, |acc, u| {
            let s = *acc;
            *acc += n - 1 - u;
            Some(s)
        })
        .collect();

    // sparse partial Fisher-Yates over 0..total
    let mut r = rng(seed);
    let mut swapped: HashMap<usize, usize> = HashMap::new();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let j = r.gen_range(i..total);
        let at_j = *swapped.get(&j).unwrap_or(&j);
        let at_i = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, at_i);
        out.push(pair_at(&row_starts, at_j));
    }
    Ok(out)
}

/// Flips `p` percent of all node pairs: present edges are removed, absent
/// ones are added with weight 1.
pub fn corrupt_percent(g: &Graph, p: f64, seed: u64) -> Result<Graph> {
    let flips: HashSet<(usize, usize)> = corruption_flips(g.node_count(), p, seed)?
        .into_iter()
        .collect();
    let mut edges: Vec<(usize, usize, f64)> = g
        .edges()
        .iter()
        .filter(|e| !flips.contains(&(e.u, e.v)))
        .map(|e| (e.u, e.v, e.weight))
        .collect();
    edges.extend(
        flips
            .iter()
            .filter(|&&(u, v)| !g.has_edge(u, v))
            .map(|&(u, v)| (u, v, 1.0)),
    );
    Graph::new(g.node_count(), edges)
}

/// Number of edges a removal fraction corresponds to.
pub fn removal_count(g: &Graph, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::validation(format!(
            "fraction {fraction} not in (0, 1)"
        )));
    }
    Ok((fraction * g.edge_count() as f64).round() as usize)
}

/// Removes a uniform sample of `round(fraction * m)` edges.
pub fn remove_edges_random(g: &Graph, fraction: f64, seed: u64) -> Result<Graph> {
    let k = removal_count(g, fraction)?;
    let mut idx: Vec<usize> = (0..g.edge_count()).collect();
    let (chosen, _) = idx.partial_shuffle(&mut rng(seed), k);
    let drop: HashSet<usize> = chosen.iter().copied().collect();
    let edges = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(i, _)| !drop.contains(i))
        .map(|(_, e)| *e)
        .collect();
    Ok(Graph::from_canonical(g.node_count(), edges))
}

/// Removes all edges of nodes in a seeded random order until
/// `round(fraction * m)` edges are gone; the last node loses only as many
/// as needed.
pub fn remove_edges_targeted(g: &Graph, fraction: f64, seed: u64) -> Result<Graph> {
    let k = removal_count(g, fraction)?;
    let mut order: Vec<usize> = (0..g.node_count()).collect();
    order.shuffle(&mut rng(seed));
    Ok(remove_edges_along(g, k, &order))
}

/// Walks `order`, removing each node's remaining edges in neighbor order,
/// and stops after exactly `count` removals (or when `order` runs out).
pub fn remove_edges_along(g: &Graph, count: usize, order: &[usize]) -> Graph {
    let mut gone: HashSet<(usize, usize)> = HashSet::new();
    'outer: for &u in order {
        for (v, _) in g.neighbors(u) {
            if gone.len() >= count {
                break 'outer;
            }
            gone.insert((u.min(v), u.max(v)));
        }
        if gone.len() >= count {
            break;
        }
    }
    g.filter_edges(|e| !gone.contains(&(e.u, e.v)))
}

/// Uniform random simple graph with exactly `m` edges.
pub fn random_graph(n: usize, m: usize, seed: u64) -> Result<Graph> {
    let total = n * n.saturating_sub(1) / 2;
    if m > total {
        return Err(Error::validation(format!(
            "{m} edges do not fit in a simple graph on {n} nodes"
        )));
    }
    let mut r = rng(seed);
    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let u = r.gen_range(0..n);
        let v = r.gen_range(0..n);
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            edges.push(Edge {
                u: key.0,
                v: key.1,
                weight: 1.0,
            });
        }
    }
    Ok(Graph::from_canonical(n, edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn components(g: &Graph) -> usize {
        let n = g.node_count();
        let mut seen = vec![false; n];
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                for (v, _) in g.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }

    fn brute_force_bridges(g: &Graph) -> Vec<(usize, usize)> {
        let base = components(g);
        g.edges()
            .iter()
            .map(|e| (e.u, e.v))
            .filter(|&p| components(&g.filter_edges(|e| (e.u, e.v) != p)) > base)
            .collect()
    }

    #[test]
    fn name_roundtrip() {
        for name in [
            "K5", "mB10", "mmB10", "m2WhB10", "mm2WhB10", "w5B10", "m10K100", "L10",
        ] {
            let spec: TopologySpec = name.parse().unwrap();
            assert_eq!(spec.to_string(), name);
        }
        assert!("X5".parse::<TopologySpec>().is_err());
        assert!("B".parse::<TopologySpec>().is_err());
    }

    #[test]
    fn sizes() {
        let k5 = generate_named("K5", 0).unwrap();
        assert_eq!((k5.node_count(), k5.edge_count()), (5, 10));
        let b10 = generate_named("B10", 0).unwrap();
        assert_eq!((b10.node_count(), b10.edge_count()), (10, 21));
        let l10 = generate_named("L10", 0).unwrap();
        assert_eq!(l10.edge_count(), 10 + 5);
        let whb = generate_named("WhB10", 0).unwrap();
        assert_eq!(whb.edge_count(), 2 * 8 + 2);
        assert_eq!(generate_named("C5", 0).unwrap().edge_count(), 5);
        assert_eq!(generate_named("S5", 0).unwrap().max_degree(), 4.0);
    }

    #[test]
    fn barbell_has_one_bridge() {
        let b10 = generate_named("B10", 0).unwrap();
        assert_eq!(brute_force_bridges(&b10), vec![(4, 5)]);
        assert_eq!(bridges(&b10), vec![(4, 5)]);
        let mm = generate_named("mmB10", 0).unwrap();
        assert_eq!(components(&mm), 2);
        assert_eq!(mm.edge_count(), 20);
    }

    #[test]
    fn tarjan_matches_brute_force() {
        for seed in 0..20 {
            let g = random_graph(30, 35, seed).unwrap();
            assert_eq!(bridges(&g), brute_force_bridges(&g), "seed {seed}");
        }
        for name in ["L10", "P7", "WhB10", "mWhB10", "S6"] {
            let g = generate_named(name, 3).unwrap();
            assert_eq!(bridges(&g), brute_force_bridges(&g), "{name}");
        }
    }

    #[test]
    fn m_never_removes_bridges() {
        for seed in 0..30 {
            for name in ["mB10", "m3L10", "m4WhB10"] {
                let g = generate_named(name, seed).unwrap();
                assert_eq!(components(&g), 1, "{name} seed {seed}");
            }
            let l = generate_named("m2L10", seed).unwrap();
            for i in 4..9 {
                assert!(l.has_edge(i, i + 1));
            }
        }
    }

    #[test]
    fn connector_mutations() {
        let w = generate_named("w5B10", 0).unwrap();
        assert_eq!(w.weight(4, 5), Some(5.0));
        assert_eq!(w.total_weight(), 20.0 + 5.0);
        let mm2 = generate_named("mm2WhB10", 0).unwrap();
        assert_eq!(components(&mm2), 2);
        assert!(generate_named("mm2B10", 0).is_err());
        assert!(generate_named("w2K5", 0).is_err());
        assert!(generate_named("WhB6", 0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(
            generate_named("m10K100", 9).unwrap(),
            generate_named("m10K100", 9).unwrap()
        );
        assert_eq!(
            generate_named("m10K100", 9).unwrap().edge_count(),
            4950 - 10
        );
    }

    #[test]
    fn pair_decoding_covers_triangle() {
        let n = 6;
        let starts: Vec<usize> = (0..n)
            .scan(0, |a, u| {
                let s = *a;
                *a += n - 1 - u;
                Some(s)
            })
            .collect();
        let all: Vec<_> = (0..15).map(|i| pair_at(&starts, i)).collect();
        let mut expected = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                expected.push((u, v));
            }
        }
        assert_eq!(all, expected);
    }

    #[test]
    fn corruption_nests() {
        let g = random_graph(50, 120, 4).unwrap();
        let f2 = corruption_flips(50, 2.0, 11).unwrap();
        let f5 = corruption_flips(50, 5.0, 11).unwrap();
        let f10 = corruption_flips(50, 10.0, 11).unwrap();
        assert_eq!(f2.len(), 25);
        assert_eq!(&f5[..f2.len()], &f2[..]);
        assert_eq!(&f10[..f5.len()], &f5[..]);
        let unique: HashSet<_> = f10.iter().collect();
        assert_eq!(unique.len(), f10.len());
        assert_eq!(
            corrupt_percent(&g, 5.0, 11).unwrap(),
            corrupt_percent(&g, 5.0, 11).unwrap()
        );
    }

    #[test]
    fn tiny_corruption_is_a_no_op() {
        let g = generate_named("P3", 0).unwrap();
        assert_eq!(corrupt_percent(&g, 1.0, 0).unwrap(), g);
        assert!(corrupt_percent(&g, 0.0, 0).is_err());
    }

    #[test]
    fn full_corruption_complements() {
        let g = generate_named("C5", 0).unwrap();
        let c = corrupt_percent(&g, 100.0, 1).unwrap();
        assert_eq!(c.edge_count(), 5);
        assert!(c.edges().iter().all(|e| !g.has_edge(e.u, e.v)));
    }

    #[test]
    fn removal_counts_match() {
        let g = random_graph(200, 1000, 1).unwrap();
        for f in [0.1, 0.25, 0.5, 0.8] {
            let r = remove_edges_random(&g, f, 5).unwrap();
            let t = remove_edges_targeted(&g, f, 5).unwrap();
            let k = (f * 1000.0).round() as usize;
            assert_eq!(r.edge_count(), 1000 - k);
            assert_eq!(t.edge_count(), 1000 - k);
        }
        let tiny = generate_named("P3", 0).unwrap();
        assert_eq!(remove_edges_random(&tiny, 0.1, 0).unwrap(), tiny);
        assert_eq!(remove_edges_targeted(&tiny, 0.1, 0).unwrap(), tiny);
    }

    #[test]
    fn targeted_star_from_center() {
        let s = generate_named("S100", 0).unwrap();
        let k = removal_count(&s, 0.99).unwrap();
        let order: Vec<usize> = (0..100).collect();
        let out = remove_edges_along(&s, k, &order);
        assert_eq!(out.edge_count(), 1);
    }
}
