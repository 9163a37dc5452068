//! Connected components and their completion.

use crate::graph::Graph;

/// Component ids are contiguous `0..count`, assigned in order of each
/// component's smallest node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentPartition {
    pub labels: Vec<usize>,
    pub count: usize,
}

impl ComponentPartition {
    /// Node sets of each component, in id order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count];
        for (v, &c) in self.labels.iter().enumerate() {
            out[c].push(v);
        }
        out
    }
}

pub fn connected_components(g: &Graph) -> ComponentPartition {
    let n = g.n();
    let mut labels = vec![usize::MAX; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if labels[s] != usize::MAX {
            continue;
        }
        labels[s] = count;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for v in g.neighbors(u) {
                if labels[v] == usize::MAX {
                    labels[v] = count;
                    stack.push(v);
                }
            }
        }
        count += 1;
    }
    ComponentPartition { labels, count }
}

/// Replaces every connected component by the complete graph on its nodes.
pub fn complete_components(g: &Graph) -> Graph {
    let cc = connected_components(g);
    let n = g.n();
    let mut out = Graph::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if cc.labels[i] == cc.labels[j] {
                out.set(i, j, true);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{bfs_all_pairs, diameter, INFINITY};
    use crate::reach::power_graph;
    use crate::testutil::{random_connected_graph, random_graph};
    use std::collections::HashSet;

    #[test]
    fn triangle_plus_isolated_node() {
        let g = Graph::from_edge_list(4, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let cc = connected_components(&g);
        assert_eq!(cc.count, 2);
        assert_eq!(cc.labels, vec![0, 0, 0, 1]);
        assert_eq!(cc.members(), vec![vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn complete_graph_is_one_component() {
        assert_eq!(connected_components(&Graph::complete(6)).count, 1);
    }

    #[test]
    fn count_matches_distinct_reachability_rows() {
        for seed in 0..20 {
            let g = random_graph(100 + seed, 25, 0.06);
            let d = bfs_all_pairs(&g);
            let rows: HashSet<Vec<bool>> = (0..g.n())
                .map(|i| d.row(i).iter().map(|&x| x != INFINITY).collect())
                .collect();
            assert_eq!(connected_components(&g).count, rows.len(), "seed {seed}");
        }
    }

    #[test]
    fn completing_components() {
        let path = Graph::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(complete_components(&path), Graph::complete(3));
        let two_edges = Graph::from_edge_list(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(complete_components(&two_edges), two_edges);
    }

    #[test]
    fn completion_equals_power_at_diameter() {
        for seed in 0..30 {
            let g = random_connected_graph(200 + seed, 4 + (seed as usize % 25), 0.1);
            let d = diameter(&g) as usize;
            assert_eq!(power_graph(&g, d.max(1)).unwrap(), complete_components(&g));
        }
    }
}
