//! Syndrome repair by minimum-weight perfect matching on the metacheck graph.
//!
//! Metachecks are nodes and every syndrome bit is an edge between the (at
//! most two) metachecks that contain it. A bit seen by a single metacheck
//! attaches to a shared boundary node. Defects (violated metachecks) are
//! paired along shortest paths, or sent to the boundary, and the repair is
//! the XOR of the edge labels on the chosen paths.

use crate::gf2::{BitVector, SparseBitMatrix};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchingError {
    #[error("matching inapplicable: column {col} of the metacheck matrix has weight {weight} > 2")]
    Inapplicable { col: usize, weight: usize },
    #[error("unmatchable defect set ({defects} defects, boundary {boundary})")]
    Unmatchable { defects: usize, boundary: bool },
    #[error("metasyndrome length {found} does not match {expected} metachecks")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchingConfig {
    /// Permit a greedy matching above `exact_limit` nodes.
    pub allow_approx_matching: bool,
    pub exact_limit: usize,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self { allow_approx_matching: false, exact_limit: 4000 }
    }
}

/// Adjacency of metachecks through syndrome bits.
#[derive(Debug, Clone)]
pub struct MetaGraph {
    nodes: usize,
    has_boundary: bool,
    // CSR adjacency sorted by (neighbour, label); the boundary is node `nodes`
    adj_start: Vec<usize>,
    adj: Vec<(usize, usize)>,
    unprotected: Vec<usize>,
    labels: usize,
}

impl MetaGraph {
    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn has_boundary(&self) -> bool {
        self.has_boundary
    }

    pub fn boundary(&self) -> usize {
        self.nodes
    }

    /// Syndrome bits not seen by any metacheck.
    pub fn unprotected(&self) -> &[usize] {
        &self.unprotected
    }

    pub fn neighbours(&self, u: usize) -> &[(usize, usize)] {
        &self.adj[self.adj_start[u]..self.adj_start[u + 1]]
    }
}

/// Builds the graph, failing when some column of `meta` has weight above 2.
pub fn build_meta_graph(meta: &SparseBitMatrix) -> Result<MetaGraph, MatchingError> {
    let nodes = meta.rows();
    let boundary = nodes;
    let mut lists: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes + 1];
    let mut unprotected = Vec::new();
    let mut has_boundary = false;
    for j in 0..meta.cols() {
        match *meta.col(j) {
            [] => unprotected.push(j),
            [a] => {
                has_boundary = true;
                lists[a].push((boundary, j));
                lists[boundary].push((a, j));
            }
            [a, b] => {
                lists[a].push((b, j));
                lists[b].push((a, j));
            }
            ref col => return Err(MatchingError::Inapplicable { col: j, weight: col.len() }),
        }
    }
    let mut adj_start = Vec::with_capacity(nodes + 2);
    let mut adj = Vec::new();
    for mut l in lists {
        l.sort_unstable();
        adj_start.push(adj.len());
        adj.extend(l);
    }
    adj_start.push(adj.len());
    Ok(MetaGraph { nodes, has_boundary, adj_start, adj, unprotected, labels: meta.cols() })
}

const UNREACHED: usize = usize::MAX;

/// Hop distances from `src`. The boundary is reachable but never expanded:
/// a path through it is the same as two boundary matches.
fn bfs(g: &MetaGraph, src: usize, dist: &mut [usize], queue: &mut VecDeque<usize>) {
    dist.iter_mut().for_each(|d| *d = UNREACHED);
    dist[src] = 0;
    queue.clear();
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        if u == g.boundary() {
            continue;
        }
        for &(w, _) in g.neighbours(u) {
            if dist[w] == UNREACHED {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
}

/// Walks back from `target` to the BFS source, always stepping to the
/// smallest-index predecessor (lowest label among parallel edges), and
/// toggles the labels of the path in `out`.
fn trace_path(g: &MetaGraph, dist: &[usize], target: usize, out: &mut BitVector) {
    let mut u = target;
    while dist[u] > 0 {
        let step = g
            .neighbours(u)
            .iter()
            .find(|&&(w, _)| w != g.boundary() && dist[w] != UNREACHED && dist[w] + 1 == dist[u])
            .copied()
            .expect("BFS predecessor exists");
        out.flip(step.1);
        u = step.0;
    }
}

/// Minimum-weight perfect matching on `nodes` vertices with the given
/// weighted edges. Returns sorted pairs, or `None` if no perfect matching
/// exists.
pub fn solve_mwpm(nodes: usize, edges: &[(usize, usize, u32)]) -> Option<Vec<(usize, usize)>> {
    if nodes == 0 {
        return Some(Vec::new());
    }
    if nodes % 2 == 1 || edges.is_empty() {
        return None;
    }
    let max_w = edges.iter().map(|e| e.2).max().unwrap_or(0) as i64;
    // maximise sum of (big - w) over maximum-cardinality matchings; even
    // weights keep the solver's dual updates integral
    let big = max_w + 1;
    let converted: Vec<(usize, usize, i32)> = edges
        .iter()
        .map(|&(a, b, w)| {
            let v = 2 * (big - w as i64);
            (a, b, i32::try_from(v).expect("matching weight fits in i32"))
        })
        .collect();
    let mates = mwmatching::Matching::new(converted).max_cardinality().solve();
    let mut pairs = Vec::with_capacity(nodes / 2);
    for i in 0..nodes {
        let j = *mates.get(i)?;
        if j == mwmatching::SENTINEL {
            return None;
        }
        if i < j {
            pairs.push((i, j));
        }
    }
    Some(pairs)
}

/// Greedy matching: repeatedly take the lightest remaining edge.
pub fn greedy_matching(nodes: usize, edges: &[(usize, usize, u32)]) -> Option<Vec<(usize, usize)>> {
    let mut sorted: Vec<_> = edges.to_vec();
    sorted.sort_by_key(|&(a, b, w)| (w, a.min(b), a.max(b)));
    let mut used = vec![false; nodes];
    let mut pairs = Vec::new();
    for (a, b, _) in sorted {
        if !used[a] && !used[b] {
            used[a] = true;
            used[b] = true;
            pairs.push((a.min(b), a.max(b)));
        }
    }
    pairs.sort_unstable();
    (pairs.len() * 2 == nodes).then_some(pairs)
}

/// Exact minimum by enumerating all pairings. Only for small test instances.
pub fn brute_force_mwpm(nodes: usize, edges: &[(usize, usize, u32)]) -> Option<(u64, Vec<(usize, usize)>)> {
    let mut w = vec![vec![None; nodes]; nodes];
    for &(a, b, x) in edges {
        w[a][b] = Some(x as u64);
        w[b][a] = Some(x as u64);
    }
    fn rec(w: &[Vec<Option<u64>>], free: &mut Vec<usize>, acc: &mut Vec<(usize, usize)>, best: &mut Option<(u64, Vec<(usize, usize)>)>, cost: u64) {
        if free.is_empty() {
            if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                *best = Some((cost, acc.clone()));
            }
            return;
        }
        let a = free.remove(0);
        for i in 0..free.len() {
            let b = free[i];
            if let Some(x) = w[a][b] {
                free.remove(i);
                acc.push((a, b));
                rec(w, free, acc, best, cost + x);
                acc.pop();
                free.insert(i, b);
            }
        }
        free.insert(0, a);
    }
    let mut best = None;
    rec(&w, &mut (0..nodes).collect(), &mut Vec::new(), &mut best, 0);
    best
}

/// Per-worker matcher with BFS scratch space.
#[derive(Debug, Clone)]
pub struct MwpmRepair {
    graph: MetaGraph,
    config: MatchingConfig,
    dist: Vec<Vec<usize>>,
    queue: VecDeque<usize>,
}

impl MwpmRepair {
    pub fn new(meta: &SparseBitMatrix, config: MatchingConfig) -> Result<Self, MatchingError> {
        Ok(Self { graph: build_meta_graph(meta)?, config, dist: Vec::new(), queue: VecDeque::new() })
    }

    pub fn graph(&self) -> &MetaGraph {
        &self.graph
    }

    /// Returns `r` with `M r = m`, built from shortest paths between matched
    /// defects.
    pub fn repair(&mut self, m: &BitVector) -> Result<BitVector, MatchingError> {
        let g = &self.graph;
        if m.len() != g.nodes {
            return Err(MatchingError::DimensionMismatch { expected: g.nodes, found: m.len() });
        }
        let defects = m.support();
        let k = defects.len();
        let mut out = BitVector::zeros(g.labels);
        if k == 0 {
            return Ok(out);
        }
        let unmatchable = MatchingError::Unmatchable { defects: k, boundary: g.has_boundary };
        if k % 2 == 1 && !g.has_boundary {
            return Err(unmatchable);
        }
        let total = g.nodes + 1;
        if self.dist.len() < k {
            self.dist.resize_with(k, || vec![UNREACHED; total]);
        }
        for (i, &d) in defects.iter().enumerate() {
            bfs(g, d, &mut self.dist[i], &mut self.queue);
        }
        let to_boundary: Vec<usize> = (0..k).map(|i| self.dist[i][g.boundary()]).collect();
        let mut edges = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let d = self.dist[i][defects[j]];
                if d == UNREACHED {
                    continue;
                }
                // pairing through the boundary is never worse beyond this
                if g.has_boundary
                    && to_boundary[i] != UNREACHED
                    && to_boundary[j] != UNREACHED
                    && d > to_boundary[i] + to_boundary[j]
                {
                    continue;
                }
                edges.push((i, j, d as u32));
            }
        }
        let nodes = if g.has_boundary {
            for (i, &b) in to_boundary.iter().enumerate() {
                if b != UNREACHED {
                    edges.push((i, k + i, b as u32));
                }
            }
            for i in 0..k {
                for j in i + 1..k {
                    edges.push((k + i, k + j, 0));
                }
            }
            2 * k
        } else {
            k
        };
        let pairs = if nodes > self.config.exact_limit && self.config.allow_approx_matching {
            greedy_matching(nodes, &edges)
        } else {
            solve_mwpm(nodes, &edges)
        }
        .ok_or(unmatchable)?;
        for (a, b) in pairs {
            match (a < k, b < k) {
                (true, true) => trace_path(g, &self.dist[a], defects[b], &mut out),
                (true, false) => trace_path(g, &self.dist[a], g.boundary(), &mut out),
                (false, true) => trace_path(g, &self.dist[b], g.boundary(), &mut out),
                (false, false) => {}
            }
        }
        Ok(out)
    }
}

/// One-shot convenience wrapper around [`MwpmRepair`].
pub fn repair_syndrome_mwpm(meta: &SparseBitMatrix, m: &BitVector) -> Result<BitVector, MatchingError> {
    MwpmRepair::new(meta, MatchingConfig::default())?.repair(m)
}
