//! Weighted one-mode projection of the bipartite graph onto product nodes.
//!
//! Two products are linked when at least one query drives impressions to
//! both. A query `q` linking products `a` and `b` contributes
//! `(1 / ln f_sq(q)) * min(W_bi(q,a), W_bi(q,b)) / max(W_bi(q,a), W_bi(q,b))`
//! to the product edge weight, so broad queries linking many products are
//! damped and asymmetric impression splits contribute less than symmetric
//! ones. Queries linking a single product contribute nothing (no pair
//! exists, and `ln 1 = 0` never enters).

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::ingest::BipartiteGraph;
use crate::scalar::Scalar;

/// Undirected weighted product graph in compressed sparse form.
///
/// Each unordered pair is stored once logically (`edges()` yields `a < b`)
/// but adjacency is materialized in both directions for traversal. All
/// stored weights are strictly positive; node weights default to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductGraph<S: Scalar = f64> {
    xadj: Vec<usize>,
    adjncy: Vec<u32>,
    adjwgt: Vec<S>,
    vwgt: Vec<u64>,
    total_edge_weight: S,
}

impl<S: Scalar> ProductGraph<S> {
    /// Build from an edge list. Duplicate pairs (in either orientation)
    /// are merged by weight addition; self-loops are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32, S)>) -> Result<Self> {
        let mut merged: HashMap<(u32, u32), S> = HashMap::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::Config(format!("self-loop on node {a}")));
            }
            if a as usize >= n || b as usize >= n {
                return Err(Error::Config(format!("edge ({a},{b}) out of range for {n} nodes")));
            }
            if w <= S::zero() || !w.is_finite() {
                return Err(Error::Config(format!("edge ({a},{b}) has non-positive weight")));
            }
            let key = (a.min(b), a.max(b));
            *merged.entry(key).or_insert_with(S::zero) += w;
        }
        let mut unique: Vec<((u32, u32), S)> = merged.into_iter().collect();
        unique.sort_by_key(|&(k, _)| k);
        Self::from_sorted_unique(n, &unique)
    }

    /// `unique` must be sorted by (a, b) with a < b and positive weights.
    fn from_sorted_unique(n: usize, unique: &[((u32, u32), S)]) -> Result<Self> {
        let mut degree = vec![0usize; n];
        for &((a, b), _) in unique {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut xadj = vec![0usize; n + 1];
        for v in 0..n {
            xadj[v + 1] = xadj[v] + degree[v];
        }
        let mut adjncy = vec![0u32; xadj[n]];
        let mut adjwgt = vec![S::zero(); xadj[n]];
        let mut cursor = xadj.clone();
        let mut total = S::zero();
        for &((a, b), w) in unique {
            adjncy[cursor[a as usize]] = b;
            adjwgt[cursor[a as usize]] = w;
            cursor[a as usize] += 1;
            adjncy[cursor[b as usize]] = a;
            adjwgt[cursor[b as usize]] = w;
            cursor[b as usize] += 1;
            total += w;
        }
        // Rows come out sorted because `unique` is sorted and the second
        // endpoint of each pair only ever appends larger first endpoints
        // before smaller second ones; sort defensively anyway.
        for v in 0..n {
            let lo = xadj[v];
            let hi = xadj[v + 1];
            let mut row: Vec<(u32, S)> = adjncy[lo..hi]
                .iter()
                .copied()
                .zip(adjwgt[lo..hi].iter().copied())
                .collect();
            row.sort_by_key(|&(u, _)| u);
            for (i, (u, w)) in row.into_iter().enumerate() {
                adjncy[lo + i] = u;
                adjwgt[lo + i] = w;
            }
        }
        Ok(Self {
            xadj,
            adjncy,
            adjwgt,
            vwgt: vec![1; n],
            total_edge_weight: total,
        })
    }

    /// Replace node weights (all must be positive).
    pub fn with_node_weights(mut self, weights: Vec<u64>) -> Result<Self> {
        if weights.len() != self.n() {
            return Err(Error::Config(format!(
                "node weight count {} != node count {}",
                weights.len(),
                self.n()
            )));
        }
        if weights.iter().any(|&w| w == 0) {
            return Err(Error::Config("node weights must be positive".into()));
        }
        self.vwgt = weights;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.vwgt.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjncy.len() / 2
    }

    pub fn degree(&self, v: u32) -> usize {
        self.xadj[v as usize + 1] - self.xadj[v as usize]
    }

    pub fn neighbors(&self, v: u32) -> impl Iterator<Item = (u32, S)> + '_ {
        let lo = self.xadj[v as usize];
        let hi = self.xadj[v as usize + 1];
        self.adjncy[lo..hi]
            .iter()
            .copied()
            .zip(self.adjwgt[lo..hi].iter().copied())
    }

    /// Neighbor ids only (sorted ascending).
    pub fn neighbor_ids(&self, v: u32) -> &[u32] {
        &self.adjncy[self.xadj[v as usize]..self.xadj[v as usize + 1]]
    }

    pub fn node_weight(&self, v: u32) -> u64 {
        self.vwgt[v as usize]
    }

    pub fn node_weights(&self) -> &[u64] {
        &self.vwgt
    }

    pub fn total_node_weight(&self) -> u64 {
        self.vwgt.iter().sum()
    }

    /// Sum of edge weights, each undirected edge counted once.
    pub fn total_edge_weight(&self) -> S {
        self.total_edge_weight
    }

    /// Weight of edge (a, b) in either orientation, if present.
    pub fn edge_weight(&self, a: u32, b: u32) -> Option<S> {
        let lo = self.xadj[a as usize];
        let hi = self.xadj[a as usize + 1];
        self.adjncy[lo..hi]
            .binary_search(&b)
            .ok()
            .map(|i| self.adjwgt[lo + i])
    }

    /// Undirected edges with `a < b`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, S)> + '_ {
        (0..self.n() as u32).flat_map(move |a| {
            self.neighbors(a)
                .filter(move |&(b, _)| a < b)
                .map(move |(b, w)| (a, b, w))
        })
    }
}

/// Diagnostics from one projection run.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct ProjectionStats {
    pub query_count: usize,
    pub queries_projected: usize,
    pub queries_single_product: usize,
    pub skipped_hub_queries: usize,
    pub hub_cap: Option<usize>,
    pub product_count: usize,
    pub edge_count: usize,
}

/// One-mode projection of `bi` onto its product nodes.
///
/// Queries with more than `hub_cap` distinct products are skipped entirely
/// (deterministic, reported in the stats) rather than pair-sampled; the
/// `1/ln f` damping already marginalizes them. Accumulation order is fixed
/// by ascending query index, so results are bitwise reproducible.
pub fn project<S: Scalar>(
    bi: &BipartiteGraph,
    hub_cap: Option<usize>,
) -> Result<(ProductGraph<S>, ProjectionStats)> {
    if let Some(cap) = hub_cap {
        if cap < 2 {
            return Err(Error::Config(format!("hub_cap must be >= 2, got {cap}")));
        }
    }
    let mut stats = ProjectionStats {
        query_count: bi.n_queries(),
        hub_cap,
        product_count: bi.n_products(),
        ..Default::default()
    };

    let mut acc: HashMap<(u32, u32), S> = HashMap::new();
    for q in 0..bi.n_queries() as u32 {
        let f = bi.f_sq(q);
        if f < 2 {
            stats.queries_single_product += 1;
            continue;
        }
        if hub_cap.is_some_and(|cap| f > cap) {
            stats.skipped_hub_queries += 1;
            continue;
        }
        stats.queries_projected += 1;
        let inv_ln_f = S::one() / S::from_usize(f).unwrap().ln();
        let row: Vec<(u32, u64)> = bi.query_neighbors(q).collect();
        for i in 0..row.len() {
            let (a, wa) = row[i];
            for &(b, wb) in &row[i + 1..] {
                let ratio = S::from_u64(wa.min(wb)).unwrap() / S::from_u64(wa.max(wb)).unwrap();
                *acc.entry((a, b)).or_insert_with(S::zero) += inv_ln_f * ratio;
            }
        }
    }

    let mut unique: Vec<((u32, u32), S)> = acc.into_iter().collect();
    unique.sort_by_key(|&(k, _)| k);
    stats.edge_count = unique.len();
    let g = ProductGraph::from_sorted_unique(bi.n_products(), &unique)?;
    Ok((g, stats))
}

/// Global clustering coefficient of the unweighted skeleton:
/// `3 * triangles / connected triples`. Defined as 0 for graphs with
/// fewer than 3 nodes or no connected triple.
pub fn clustering_coefficient<S: Scalar>(g: &ProductGraph<S>) -> f64 {
    if g.n() < 3 {
        return 0.0;
    }
    let mut triples: u64 = 0;
    for v in 0..g.n() as u32 {
        let d = g.degree(v) as u64;
        triples += d * d.saturating_sub(1) / 2;
    }
    if triples == 0 {
        return 0.0;
    }
    // Each triangle is counted once per edge; sorted-adjacency
    // intersection over edges with a < b.
    let mut closed: u64 = 0;
    for (a, b, _) in g.edges() {
        closed += sorted_intersection_count(g.neighbor_ids(a), g.neighbor_ids(b));
    }
    closed as f64 / triples as f64
}

fn sorted_intersection_count(xs: &[u32], ys: &[u32]) -> u64 {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < xs.len() && j < ys.len() {
        match xs[i].cmp(&ys[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

// ---------------------------------------------------------------------------
// Artifact I/O: headerless TSV `product_a<TAB>product_b<TAB>weight`, a < b,
// sorted; weights in shortest round-trip decimal form.
// ---------------------------------------------------------------------------

pub fn write_projection_tsv<S: Scalar, W: Write>(g: &ProductGraph<S>, mut w: W) -> std::io::Result<()> {
    for (a, b, weight) in g.edges() {
        writeln!(w, "{a}\t{b}\t{weight}")?;
    }
    Ok(())
}

pub fn read_projection_tsv<S: Scalar>(content: &str, n_nodes: usize) -> Result<ProductGraph<S>> {
    let mut edges = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        let mut it = line.split('\t');
        let bad = || Error::MalformedArtifact {
            what: "projection edge list",
            path: "projection.tsv".into(),
            line: lineno + 1,
            msg: "expected a\\tb\\tweight".into(),
        };
        let a: u32 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let b: u32 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let w: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        edges.push((a, b, S::from_f64_lossy(w)));
    }
    ProductGraph::from_edges(n_nodes, edges)
}
