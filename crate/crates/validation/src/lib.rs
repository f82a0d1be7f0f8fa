//! Reference oracles for the acceptance suite. They are written for
//! clarity, not speed, and share no code with the library routines they
//! check.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use singleshot::gf2::SparseBitMatrix;

/// Adjacency lists of an undirected graph on `n` nodes, self-loops dropped.
pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a != b {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    adj
}

/// Random connected graph: a random spanning tree plus up to `n` extra edges.
pub fn random_connected_edges(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    for _ in 0..rng.random_range(0..=n) {
        edges.push((rng.random_range(0..n), rng.random_range(0..n)));
    }
    edges
}

/// Sizes of the connected components of the subgraph induced by `mask`.
pub fn induced_components(adj: &[Vec<usize>], mask: u32) -> Vec<usize> {
    let mut seen = 0u32;
    let mut sizes = Vec::new();
    for start in 0..adj.len() {
        if mask >> start & 1 == 0 || seen >> start & 1 == 1 {
            continue;
        }
        let mut stack = vec![start];
        seen |= 1 << start;
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            for &w in &adj[v] {
                if mask >> w & 1 == 1 && seen >> w & 1 == 0 {
                    seen |= 1 << w;
                    stack.push(w);
                }
            }
        }
        sizes.push(size);
    }
    sizes
}

/// β-closeness by scanning every node subset of size β (at most 20 nodes).
pub fn closeness_by_subsets(adj: &[Vec<usize>], set: u32, beta: usize) -> usize {
    let n = adj.len();
    assert!(n <= 20);
    (0u32..1 << n)
        .filter(|k| k.count_ones() as usize == beta && induced_components(adj, *k).len() == 1)
        .map(|k| (k & set).count_ones() as usize)
        .max()
        .unwrap_or(0)
}

/// Random `rows × cols` matrix with each entry set with probability
/// `density`, rejecting all-zero draws.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> SparseBitMatrix {
    loop {
        let dense: Vec<Vec<u8>> =
            (0..rows).map(|_| (0..cols).map(|_| u8::from(rng.random_bool(density))).collect()).collect();
        let m = SparseBitMatrix::from_dense(&dense).expect("rectangular");
        if !m.is_zero() {
            return m;
        }
    }
}

/// Rank over GF(2) by dense elimination on `u64` rows (at most 64 columns).
pub fn dense_rank(m: &SparseBitMatrix) -> usize {
    assert!(m.cols() <= 64);
    let mut rows: Vec<u64> = m.row_supports().iter().map(|r| r.iter().fold(0u64, |a, &c| a | 1 << c)).collect();
    let mut rank = 0;
    for col in 0..m.cols() {
        let Some(p) = (rank..rows.len()).find(|&i| rows[i] >> col & 1 == 1) else { continue };
        rows.swap(rank, p);
        for i in 0..rows.len() {
            if i != rank && rows[i] >> col & 1 == 1 {
                rows[i] ^= rows[rank];
            }
        }
        rank += 1;
    }
    rank
}

/// Linear interpolation of the crossing of two failure curves sampled on the
/// same `p` grid, if they cross.
pub fn crossing(p: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    for i in 1..p.len() {
        let d0 = a[i - 1] - b[i - 1];
        let d1 = a[i] - b[i];
        if d0 == 0.0 {
            return Some(p[i - 1]);
        }
        if d0.signum() != d1.signum() {
            return Some(p[i - 1] + (p[i] - p[i - 1]) * d0 / (d0 - d1));
        }
    }
    None
}
