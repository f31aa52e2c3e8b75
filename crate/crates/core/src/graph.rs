//! Weighted-graph data model: validation, self-loop weighting, impact
//! factors, and noise-edge injection.
//!
//! Graphs are undirected with strictly positive edge weights. A missing edge
//! means weight zero. Directed or duplicated input is symmetrized by keeping
//! the maximum weight per unordered pair.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;

/// One undirected edge in canonical form (`u < v`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Undirected weighted graph with a per-node sorted neighbor index.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    /// Validate and build a graph from raw `(u, v, w)` triples.
    ///
    /// Rejects node ids outside `[0, n)`, non-positive weights, and self
    /// edges. Duplicate pairs (in either orientation) collapse to a single
    /// undirected edge carrying the maximum weight seen for the pair.
    pub fn from_edges<I>(n: usize, raw: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut canonical: Vec<(usize, usize, f64)> = Vec::new();
        for (u, v, w) in raw {
            if u >= n {
                return Err(Error::NodeOutOfRange { id: u, n });
            }
            if v >= n {
                return Err(Error::NodeOutOfRange { id: v, n });
            }
            if u == v {
                return Err(Error::SelfEdge(u));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::NonPositiveWeight { u, v, w });
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            canonical.push((a, b, w));
        }
        canonical.sort_by_key(|&(u, v, _)| (u, v));

        let mut edges: Vec<Edge> = Vec::with_capacity(canonical.len());
        for (u, v, w) in canonical {
            match edges.last_mut() {
                Some(last) if last.u == u && last.v == v => last.w = last.w.max(w),
                _ => edges.push(Edge { u, v, w }),
            }
        }

        let mut adj = vec![Vec::new(); n];
        for e in &edges {
            adj[e.u].push((e.v, e.w));
            adj[e.v].push((e.u, e.w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(j, _)| j);
        }

        Ok(Self { n, edges, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list, sorted by `(u, v)` with `u < v`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `i` with weights, sorted by neighbor id.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn is_isolated(&self, i: usize) -> bool {
        self.adj[i].is_empty()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.adj[u]
            .binary_search_by_key(&v, |&(j, _)| j)
            .ok()
            .map(|idx| self.adj[u][idx].1)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v).is_some()
    }

    /// Copy of the graph with every weight replaced by 1 (used by the
    /// uniform-impact ablation variants).
    pub fn unit_weights(&self) -> Self {
        Self::from_edges(self.n, self.edges.iter().map(|e| (e.u, e.v, 1.0)))
            .expect("unit-weight copy of a valid graph is valid")
    }
}

/// Self-loop weighting rule: aggregate of a node's neighbor weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelfLoopMode {
    Max,
    Min,
    Avg,
}

impl SelfLoopMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Self::Max),
            "min" => Ok(Self::Min),
            "avg" => Ok(Self::Avg),
            other => Err(Error::Config(format!(
                "unknown self-loop mode '{other}' (expected max, min, or avg)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Max => "max",
            Self::Min => "min",
            Self::Avg => "avg",
        }
    }
}

/// A validated graph together with per-node self-loop weights.
#[derive(Debug, Clone)]
pub struct LoopedGraph {
    graph: WeightedGraph,
    self_w: Vec<f64>,
    mode: SelfLoopMode,
}

impl LoopedGraph {
    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn self_weight(&self, i: usize) -> f64 {
        self.self_w[i]
    }

    pub fn mode(&self) -> SelfLoopMode {
        self.mode
    }
}

/// Attach self-loop weights: the max/min/avg of each node's neighbor
/// weights. Isolated nodes get weight 1 so they still attend to themselves.
pub fn assign_self_loop_weights(graph: WeightedGraph, mode: SelfLoopMode) -> LoopedGraph {
    let self_w = (0..graph.n())
        .map(|i| {
            let nbrs = graph.neighbors(i);
            if nbrs.is_empty() {
                return 1.0;
            }
            match mode {
                SelfLoopMode::Max => nbrs
                    .iter()
                    .map(|&(_, w)| w)
                    .fold(f64::NEG_INFINITY, f64::max),
                SelfLoopMode::Min => nbrs.iter().map(|&(_, w)| w).fold(f64::INFINITY, f64::min),
                SelfLoopMode::Avg => nbrs.iter().map(|&(_, w)| w).sum::<f64>() / nbrs.len() as f64,
            }
        })
        .collect();
    LoopedGraph {
        graph,
        self_w,
        mode,
    }
}

/// Normalized per-edge influence: each directed pair `(i, j)` gets the edge
/// weight divided by the sum of `i`'s neighbor weights (the self-loop weight
/// is normalized by the same sum but excluded from it).
#[derive(Debug, Clone)]
pub struct ImpactFactors {
    neighbor: Vec<Vec<f64>>,
    self_loop: Vec<f64>,
}

impl ImpactFactors {
    /// Impact factors toward `i`'s neighbors, aligned with
    /// `WeightedGraph::neighbors(i)`.
    pub fn neighbor_row(&self, i: usize) -> &[f64] {
        &self.neighbor[i]
    }

    pub fn self_loop(&self, i: usize) -> f64 {
        self.self_loop[i]
    }

    /// Impact factor for the directed pair `(i, j)`; 0 when no edge exists.
    pub fn rho(&self, graph: &WeightedGraph, i: usize, j: usize) -> f64 {
        if i == j {
            return self.self_loop[i];
        }
        match graph.neighbors(i).binary_search_by_key(&j, |&(k, _)| k) {
            Ok(idx) => self.neighbor[i][idx],
            Err(_) => 0.0,
        }
    }
}

/// Build impact factors from a graph with assigned self-loop weights.
///
/// For a non-isolated node the neighbor entries sum to exactly 1; the
/// self-loop entry shares the denominator but is not part of that sum. An
/// isolated node keeps only its self-loop with value 1.
pub fn build_impact_factors(looped: &LoopedGraph) -> ImpactFactors {
    let g = looped.graph();
    let mut neighbor = Vec::with_capacity(g.n());
    let mut self_loop = Vec::with_capacity(g.n());
    for i in 0..g.n() {
        let nbrs = g.neighbors(i);
        if nbrs.is_empty() {
            neighbor.push(Vec::new());
            self_loop.push(1.0);
            continue;
        }
        let denom: f64 = nbrs.iter().map(|&(_, w)| w).sum();
        neighbor.push(nbrs.iter().map(|&(_, w)| w / denom).collect());
        self_loop.push(looped.self_weight(i) / denom);
    }
    ImpactFactors {
        neighbor,
        self_loop,
    }
}

/// Add `ceil(fraction * |E|)` random edges between previously unconnected
/// node pairs, each weighted by a uniform draw from the existing weight
/// multiset. Existing edges are never touched.
pub fn inject_noise_edges(
    graph: &WeightedGraph,
    fraction: f64,
    seed: u64,
) -> Result<WeightedGraph> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidGraph(format!(
            "noise fraction {fraction} must lie in [0, 1]"
        )));
    }
    let n = graph.n();
    let count = (fraction * graph.edge_count() as f64).ceil() as usize;
    if count == 0 {
        return Ok(graph.clone());
    }

    let total_pairs = n * (n - 1) / 2;
    let available = total_pairs - graph.edge_count();
    if count > available {
        return Err(Error::InsufficientNonEdges {
            requested: count,
            available,
        });
    }

    let mut taken: HashSet<(usize, usize)> = graph.edges().iter().map(|e| (e.u, e.v)).collect();
    let weights: Vec<f64> = graph.edges().iter().map(|e| e.w).collect();
    let mut rng = seeding::stream_rng(seed, seeding::streams::NOISE);

    let mut new_edges: Vec<(usize, usize, f64)> =
        graph.edges().iter().map(|e| (e.u, e.v, e.w)).collect();

    if count * 3 >= available {
        // Dense regime: enumerate the non-edges and take a random prefix.
        let mut non_edges: Vec<(usize, usize)> = Vec::with_capacity(available);
        for u in 0..n {
            for v in (u + 1)..n {
                if !taken.contains(&(u, v)) {
                    non_edges.push((u, v));
                }
            }
        }
        for k in 0..count {
            let pick = rng.random_range(k..non_edges.len());
            non_edges.swap(k, pick);
            let (u, v) = non_edges[k];
            let w = weights[rng.random_range(0..weights.len())];
            new_edges.push((u, v, w));
        }
    } else {
        // Sparse regime: rejection sampling is uniform over non-edges.
        let mut added = 0;
        while added < count {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u == v {
                continue;
            }
            let pair = if u < v { (u, v) } else { (v, u) };
            if taken.contains(&pair) {
                continue;
            }
            taken.insert(pair);
            let w = weights[rng.random_range(0..weights.len())];
            new_edges.push((pair.0, pair.1, w));
            added += 1;
        }
    }

    WeightedGraph::from_edges(n, new_edges)
}
