//! Fill-reducing orderings.
//!
//! The minimum-degree ordering works on the explicit elimination graph of
//! `A + Aᵀ`. Ties are broken by the smallest vertex id, so the permutation is
//! a deterministic function of the sparsity pattern.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    Natural,
    MinimumDegree,
}

/// Returns the permutation `perm` with `perm[k]` = vertex eliminated at step `k`.
pub fn compute_ordering(a: &CsrMatrix, ordering: Ordering) -> Vec<usize> {
    match ordering {
        Ordering::Natural => (0..a.nrows()).collect(),
        Ordering::MinimumDegree => minimum_degree(&a.symmetric_adjacency()),
    }
}

/// Minimum-degree ordering of an undirected graph given as sorted adjacency lists.
pub fn minimum_degree(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut adj: Vec<Vec<usize>> = adjacency.to_vec();
    let mut eliminated = vec![false; n];
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (adj[v].len(), v)).collect();
    let mut perm = Vec::with_capacity(n);
    let mut merged = Vec::new();

    while let Some((_, v)) = queue.pop_first() {
        eliminated[v] = true;
        perm.push(v);
        let nbrs = std::mem::take(&mut adj[v]);
        for &u in &nbrs {
            queue.remove(&(adj[u].len(), u));
            // N(u) <- (N(u) ∪ N(v)) \ {u, v}
            merged.clear();
            let (a, b) = (&adj[u], &nbrs);
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                let next = match (a.get(i), b.get(j)) {
                    (Some(&x), Some(&y)) if x == y => {
                        i += 1;
                        j += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        i += 1;
                        x
                    }
                    (Some(_), Some(&y)) => {
                        j += 1;
                        y
                    }
                    (Some(&x), None) => {
                        i += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        j += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                if next != u && next != v && !eliminated[next] {
                    merged.push(next);
                }
            }
            std::mem::swap(&mut adj[u], &mut merged);
            queue.insert((adj[u].len(), u));
        }
    }
    perm
}

/// Counts nonzeros of the Cholesky factor of `P A Pᵀ` by symbolic elimination.
/// Used to compare orderings.
pub fn symbolic_fill(adjacency: &[Vec<usize>], perm: &[usize]) -> usize {
    let n = adjacency.len();
    let mut inv = vec![0usize; n];
    for (k, &v) in perm.iter().enumerate() {
        inv[v] = k;
    }
    let mut sets: Vec<BTreeSet<usize>> =
        (0..n).map(|k| adjacency[perm[k]].iter().map(|&u| inv[u]).filter(|&j| j > k).collect()).collect();
    let mut total = n;
    for k in 0..n {
        let higher = std::mem::take(&mut sets[k]);
        total += higher.len();
        if let Some(&parent) = higher.iter().next() {
            for &j in higher.iter().skip(1) {
                sets[parent].insert(j);
            }
        }
    }
    total
}
