//! Binary k-hop reachability, graph powers and the k-hop similarity test.

use crate::distance::{bfs_all_pairs, DistanceMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// `reach[i][j]` is true iff node `j` is within `k` hops of node `i`.
/// The diagonal is always set (distance 0).
///
/// Rows are packed into 64-bit words so that two matrices can be compared
/// and combined a word at a time.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ReachabilityMatrix {
    n: usize,
    k: usize,
    words: usize,
    bits: Vec<u64>,
}

impl ReachabilityMatrix {
    fn zeroed(n: usize, k: usize) -> Self {
        let words = n.div_ceil(64);
        ReachabilityMatrix {
            n,
            k,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    fn row_words(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// Number of true entries, diagonal included.
    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 1 {
        Err(Error::InvalidHopBound(k))
    } else {
        Ok(())
    }
}

/// Thresholds a distance matrix: `reach[i][j] = dist[i][j] <= k`.
pub fn k_hop_reachability(d: &DistanceMatrix, k: usize) -> Result<ReachabilityMatrix> {
    check_k(k)?;
    let n = d.n();
    let bound = u32::try_from(k).unwrap_or(u32::MAX - 1);
    let mut r = ReachabilityMatrix::zeroed(n, k);
    for i in 0..n {
        for (j, &dij) in d.row(i).iter().enumerate() {
            if dij <= bound {
                r.set(i, j);
            }
        }
    }
    Ok(r)
}

/// Computes the same matrix as [`k_hop_reachability`] directly from the
/// adjacency by `k` rounds of bitset frontier expansion, without building a
/// distance matrix.
pub fn bounded_reachability(g: &Graph, k: usize) -> Result<ReachabilityMatrix> {
    check_k(k)?;
    let n = g.n();
    let mut adj = ReachabilityMatrix::zeroed(n, 1);
    let mut cur = ReachabilityMatrix::zeroed(n, 0);
    for i in 0..n {
        cur.set(i, i);
        for j in g.neighbors(i) {
            adj.set(i, j);
        }
    }
    let words = cur.words;
    let mut next = cur.bits.clone();
    for _ in 0..k.min(n.saturating_sub(1)) {
        let mut changed = false;
        for i in 0..n {
            let row = cur.row_words(i);
            let out = &mut next[i * words..(i + 1) * words];
            out.copy_from_slice(row);
            for (w, &word) in row.iter().enumerate() {
                let mut word = word;
                while word != 0 {
                    let j = w * 64 + word.trailing_zeros() as usize;
                    word &= word - 1;
                    for (o, &a) in out.iter_mut().zip(adj.row_words(j)) {
                        *o |= a;
                    }
                }
            }
            changed |= out != row;
        }
        std::mem::swap(&mut cur.bits, &mut next);
        if !changed {
            break;
        }
    }
    cur.k = k;
    Ok(cur)
}

/// The k-th power: `i ~ j` iff `0 < dist(i, j) <= k`.
pub fn power_graph(g: &Graph, k: usize) -> Result<Graph> {
    let r = bounded_reachability(g, k)?;
    let n = g.n();
    let mut p = Graph::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if r.get(i, j) {
                p.set(i, j, true);
            }
        }
    }
    Ok(p)
}

/// Two graphs on the same node set are k-hop similar when their k-hop
/// reachability matrices coincide. Node `i` of `g1` corresponds to node `i`
/// of `g2`.
pub fn is_k_hop_similar(g1: &Graph, g2: &Graph, k: usize) -> Result<bool> {
    check_k(k)?;
    if g1.n() != g2.n() {
        return Err(Error::SizeMismatch(g1.n(), g2.n()));
    }
    let r1 = k_hop_reachability(&bfs_all_pairs(g1), k)?;
    let r2 = k_hop_reachability(&bfs_all_pairs(g2), k)?;
    Ok(r1 == r2)
}
