//! Seeded random graphs shared by unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;

/// Erdős–Rényi G(n, p).
pub fn random_graph(seed: u64, n: usize, p: f64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(p) {
                g.set(i, j, true);
            }
        }
    }
    g
}

/// G(n, p) plus a random spanning path, so always connected.
pub fn random_connected_graph(seed: u64, n: usize, p: f64) -> Graph {
    use rand::seq::SliceRandom;
    let mut g = random_graph(seed, n, p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for w in order.windows(2) {
        g.set(w[0], w[1], true);
    }
    g
}
