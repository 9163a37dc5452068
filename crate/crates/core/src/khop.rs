//! Generation of k-hop similar graphs by deleting edges that no k-hop
//! neighborhood depends on.
//!
//! Both generators walk a seeded shuffle of the input's edges and tentatively
//! delete them (singly, or in consecutive batches), keeping a deletion only
//! when the binary k-hop reachability of the tentative graph equals that of
//! the input. Since deletions can only shrink reachability, comparing against
//! the input's matrix and against the current graph's matrix is the same
//! test.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distance::{bfs_all_pairs, floyd_warshall};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::reach::{bounded_reachability, k_hop_reachability, ReachabilityMatrix};

/// How candidate graphs are checked.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReachBackend {
    /// Floyd–Warshall distance matrix thresholded at `k`.
    FloydWarshall,
    /// k rounds of bitset expansion. Produces the identical matrix.
    #[default]
    Bitset,
}

impl ReachBackend {
    fn reach(self, g: &Graph, k: usize) -> Result<ReachabilityMatrix> {
        match self {
            ReachBackend::FloydWarshall => k_hop_reachability(&floyd_warshall(g), k),
            ReachBackend::Bitset => bounded_reachability(g, k),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub k: usize,
    /// Fraction of the input's edges to aim to delete.
    pub threshold_fraction: f64,
    /// Edges per batch; `None` means half the removal target (at least 1).
    pub batch_size: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub backend: ReachBackend,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            k: 2,
            threshold_fraction: 0.2,
            batch_size: None,
            seed: 0,
            backend: ReachBackend::default(),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidHopBound(self.k));
        }
        if !(0.0..=1.0).contains(&self.threshold_fraction) {
            return Err(Error::Config(format!(
                "threshold fraction must lie in [0, 1], got {}",
                self.threshold_fraction
            )));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }

    /// Removal target `T = floor(fraction * edges)`.
    pub fn removal_threshold(&self, edge_count: usize) -> usize {
        (self.threshold_fraction * edge_count as f64).floor() as usize
    }

    pub fn effective_batch_size(&self, edge_count: usize) -> usize {
        self.batch_size
            .unwrap_or_else(|| (self.removal_threshold(edge_count) / 2).max(1))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenReport {
    #[serde(rename = "removed")]
    pub removed_edges: Vec<Edge>,
    pub removal_count: usize,
    pub batches_tried: usize,
    pub batches_accepted: usize,
}

fn shuffled_edges(g: &Graph, seed: u64) -> Vec<Edge> {
    let mut edges = g.edges();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    edges.shuffle(&mut rng);
    edges
}

/// Single-pass greedy deletion: every edge is tried once, in seeded random
/// order, and deleted if the k-hop reachability is unchanged.
pub fn generate_basic(g: &Graph, k: usize, seed: u64) -> Result<(Graph, GenReport)> {
    generate_basic_with(g, k, seed, ReachBackend::default())
}

pub fn generate_basic_with(
    g: &Graph,
    k: usize,
    seed: u64,
    backend: ReachBackend,
) -> Result<(Graph, GenReport)> {
    let target = backend.reach(g, k)?;
    let mut current = g.clone();
    let mut report = GenReport::default();
    for (i, j) in shuffled_edges(g, seed) {
        report.batches_tried += 1;
        current.set(i, j, false);
        if backend.reach(&current, k)? == target {
            report.removed_edges.push((i, j));
            report.batches_accepted += 1;
        } else {
            current.set(i, j, true);
        }
    }
    report.removal_count = report.removed_edges.len();
    Ok((current, report))
}

/// Batched deletion with a removal target. Consecutive batches of the
/// shuffled edge list are deleted together and kept only if the whole batch
/// preserves reachability; a rejected batch is restored in full. Stops once
/// at least `T` edges have been removed, so the last accepted batch may
/// overshoot `T` by up to `b - 1`.
pub fn generate_batched(g: &Graph, cfg: &GenConfig) -> Result<(Graph, GenReport)> {
    cfg.validate()?;
    let m = g.edge_count();
    let threshold = cfg.removal_threshold(m);
    let batch_size = cfg.effective_batch_size(m);
    let target = cfg.backend.reach(g, cfg.k)?;

    let mut current = g.clone();
    let mut report = GenReport::default();
    let edges = shuffled_edges(g, cfg.seed);
    for batch in edges.chunks(batch_size) {
        if report.removal_count >= threshold {
            break;
        }
        report.batches_tried += 1;
        for &(i, j) in batch {
            current.set(i, j, false);
        }
        if cfg.backend.reach(&current, cfg.k)? == target {
            report.removed_edges.extend_from_slice(batch);
            report.removal_count += batch.len();
            report.batches_accepted += 1;
        } else {
            for &(i, j) in batch {
                current.set(i, j, true);
            }
        }
    }
    Ok((current, report))
}

/// Hard ceiling for [`brute_force_removal_oracle`]: `2^24` subsets.
pub const BRUTE_FORCE_EDGE_CAP: usize = 24;

/// Enumerates every subset of the edges and returns the inclusion-maximal
/// ones whose deletion leaves k-hop reachability unchanged. Each set is
/// sorted; the list is sorted lexicographically.
pub fn brute_force_removal_oracle(g: &Graph, k: usize, max_edges: usize) -> Result<Vec<Vec<Edge>>> {
    let edges = g.edges();
    let limit = max_edges.min(BRUTE_FORCE_EDGE_CAP);
    if edges.len() > limit {
        return Err(Error::TooManyEdges {
            edges: edges.len(),
            limit,
        });
    }
    let target = k_hop_reachability(&bfs_all_pairs(g), k)?;
    let m = edges.len();
    let mut removable = vec![false; 1 << m];
    let mut work = g.clone();
    for (mask, slot) in removable.iter_mut().enumerate() {
        for (b, &(i, j)) in edges.iter().enumerate() {
            work.set(i, j, mask >> b & 1 == 0);
        }
        *slot = k_hop_reachability(&bfs_all_pairs(&work), k)? == target;
    }
    let mut out: Vec<Vec<Edge>> = (0usize..(1 << m))
        .filter(|&mask| {
            removable[mask] && (0..m).all(|b| mask >> b & 1 == 1 || !removable[mask | 1 << b])
        })
        .map(|mask| {
            (0..m)
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| edges[b])
                .collect()
        })
        .collect();
    out.sort();
    Ok(out)
}
