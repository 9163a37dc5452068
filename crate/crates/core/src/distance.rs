//! All-pairs hop distances.

use std::collections::VecDeque;

use crate::graph::Graph;

/// Hop count standing in for "no path". Larger than any real distance, and
/// `saturating_add` keeps it absorbing during relaxation.
pub const INFINITY: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    dist: Vec<u32>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.dist
    }

    /// Largest finite entry, or [`INFINITY`] if any pair is disconnected.
    pub fn max_entry(&self) -> u32 {
        self.dist.iter().copied().max().unwrap_or(0)
    }
}

/// Dense Floyd–Warshall over hop counts.
pub fn floyd_warshall(g: &Graph) -> DistanceMatrix {
    let n = g.n();
    let mut dist = vec![INFINITY; n * n];
    for i in 0..n {
        dist[i * n + i] = 0;
        for j in g.neighbors(i) {
            dist[i * n + j] = 1;
        }
    }
    for m in 0..n {
        let (before, rest) = dist.split_at_mut(m * n);
        let (row_m, after) = rest.split_at_mut(n);
        let row_m: &[u32] = row_m;
        for row_i in before.chunks_exact_mut(n).chain(after.chunks_exact_mut(n)) {
            let d_im = row_i[m];
            if d_im == INFINITY {
                continue;
            }
            for (d_ij, &d_mj) in row_i.iter_mut().zip(row_m) {
                let via = d_im.saturating_add(d_mj);
                if via < *d_ij {
                    *d_ij = via;
                }
            }
        }
    }
    DistanceMatrix { n, dist }
}

/// Breadth-first search from every node. Same contract as [`floyd_warshall`].
pub fn bfs_all_pairs(g: &Graph) -> DistanceMatrix {
    let n = g.n();
    let mut dist = vec![INFINITY; n * n];
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        let row = &mut dist[s * n..(s + 1) * n];
        row[s] = 0;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let du = row[u];
            for v in g.neighbors(u) {
                if row[v] == INFINITY {
                    row[v] = du + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    DistanceMatrix { n, dist }
}

/// Longest shortest path, or [`INFINITY`] when the graph is disconnected.
/// The empty graph on zero nodes has diameter 0.
pub fn diameter(g: &Graph) -> u32 {
    bfs_all_pairs(g).max_entry()
}
