#![allow(dead_code)]

use khop_core::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_graph(seed: u64, n: usize, p: f64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(i, j).unwrap();
            }
        }
    }
    g
}

/// A random graph with a random Hamiltonian path added, so it is connected.
pub fn random_connected_graph(seed: u64, n: usize, p: f64) -> Graph {
    use rand::seq::SliceRandom;
    let mut g = random_graph(seed, n, p);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x9e37));
    for w in order.windows(2) {
        g.add_edge(w[0], w[1]).unwrap();
    }
    g
}

pub fn permute_graph(g: &Graph, perm: &[usize]) -> Graph {
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|&(a, b)| (perm[a], perm[b])).collect();
    Graph::from_edge_list(g.n(), &edges).unwrap()
}
