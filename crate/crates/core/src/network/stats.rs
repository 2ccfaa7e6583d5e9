use std::collections::HashMap;

use super::Digraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphStats {
    /// Longest shortest-path length `D(G)`.
    pub diameter: usize,
    /// Maximal edge utility `K(G)`: the largest number of ordered node
    /// pairs whose canonical shortest path crosses a single edge.
    pub max_edge_utility: usize,
}

/// Diameter and maximal edge utility of a strongly connected graph. The
/// canonical path from `s` to `v` is traced backwards from `v`, always
/// stepping to the lowest-index in-neighbour one BFS layer closer to `s`.
pub fn graph_stats(g: &Digraph) -> GraphStats {
    let n = g.n();
    let mut diameter = 0;
    let mut usage: HashMap<(usize, usize), usize> = HashMap::new();
    for s in 0..n {
        let dist = g.bfs_distances(s);
        for v in 0..n {
            if v == s || dist[v] == usize::MAX {
                continue;
            }
            diameter = diameter.max(dist[v]);
            let mut cur = v;
            while cur != s {
                let prev = g
                    .in_neighbors(cur)
                    .iter()
                    .copied()
                    .filter(|&u| dist[u] + 1 == dist[cur])
                    .min()
                    .expect("BFS layer has a predecessor");
                *usage.entry((prev, cur)).or_default() += 1;
                cur = prev;
            }
        }
    }
    GraphStats {
        diameter,
        max_edge_utility: usage.values().copied().max().unwrap_or(0),
    }
}
