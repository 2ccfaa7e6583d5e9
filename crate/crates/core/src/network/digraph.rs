use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rng::{self, Domain};
use crate::{Error, Result};

/// A directed graph on `n` nodes. An edge `(j, i)` means node `i` receives
/// from node `j`. Self-loops are implied for every node and never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    in_nbrs: Vec<Vec<usize>>,
    out_nbrs: Vec<Vec<usize>>,
}

impl Digraph {
    /// Builds a graph and checks the communication invariants: at least two
    /// nodes and strong connectivity.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::config("graph.n", format!("need at least 2 agents, got {n}")));
        }
        let g = Self::from_edges(n, edges)?;
        if !g.is_strongly_connected() {
            return Err(Error::config("graph", "graph is not strongly connected"));
        }
        Ok(g)
    }

    /// Builds a graph without the connectivity check (single node allowed).
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (j, i) in edges {
            if j >= n || i >= n {
                return Err(Error::config(
                    "graph.edges",
                    format!("edge ({j} -> {i}) out of range for n = {n}"),
                ));
            }
            if j != i {
                set.insert((j, i));
            }
        }
        let mut in_nbrs = vec![Vec::new(); n];
        let mut out_nbrs = vec![Vec::new(); n];
        for &(j, i) in &set {
            in_nbrs[i].push(j);
            out_nbrs[j].push(i);
        }
        Ok(Self {
            n,
            edges: set,
            in_nbrs,
            out_nbrs,
        })
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|j| (0..n).map(move |i| (j, i))))
    }

    /// Directed ring `0 → 1 → … → n-1 → 0`.
    pub fn ring(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|j| (j, (j + 1) % n)))
    }

    /// Random strongly connected digraph: each ordered pair is an edge with
    /// probability `density`, unioned with a random Hamiltonian cycle.
    pub fn random(n: usize, density: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::config("topology.density", "must lie in [0, 1]"));
        }
        let mut rng = rng::stream(seed, Domain::BaseGraph, &[n as u64]);
        let mut edges = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if i != j && rng.random_bool(density) {
                    edges.push((j, i));
                }
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        for k in 0..n {
            edges.push((perm[k], perm[(k + 1) % n]));
        }
        Self::new(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Non-loop edges `(j, i)`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// True for self-loops as well as stored edges.
    pub fn has_edge(&self, j: usize, i: usize) -> bool {
        j == i || self.edges.contains(&(j, i))
    }

    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_nbrs[i]
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out_nbrs[i]
    }

    pub fn is_subgraph_of(&self, other: &Digraph) -> bool {
        self.n == other.n && self.edges.is_subset(&other.edges)
    }

    /// BFS distances from `s` following edge direction; `usize::MAX` marks
    /// unreachable nodes.
    pub fn bfs_distances(&self, s: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.out_nbrs[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_strongly_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        // Reachability from node 0 in the graph and in its reverse.
        let forward = self.bfs_distances(0).iter().all(|&d| d != usize::MAX);
        if !forward {
            return false;
        }
        let mut seen = vec![false; self.n];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(u) = stack.pop() {
            for &v in &self.in_nbrs[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn union(&self, extra: impl IntoIterator<Item = (usize, usize)>) -> Digraph {
        let edges: Vec<_> = self.edges().chain(extra).collect();
        Digraph::from_edges(self.n, edges).expect("edges already validated")
    }
}

/// Base graph families for the time-varying topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseKind {
    Complete,
    Ring,
    Random,
}

impl BaseKind {
    pub fn build(self, n: usize, seed: u64) -> Result<Digraph> {
        match self {
            BaseKind::Complete => Digraph::complete(n),
            BaseKind::Ring => Digraph::ring(n),
            BaseKind::Random => Digraph::random(n, 0.3, seed),
        }
    }
}

/// Samples the round-`t` communication graph: every base edge is kept
/// independently with probability `keep_prob`. A disconnected sample is
/// repaired in one step with edges drawn from the same seeded stream: a
/// random Hamiltonian cycle when all of its edges exist in the base,
/// otherwise the BFS out- and in-arborescences of a random root inside the
/// base.
pub fn generate_round_graph(base: &Digraph, keep_prob: f64, seed: u64, t: usize) -> Result<Digraph> {
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(Error::config(
            "topology.keep_prob",
            format!("must lie in (0, 1], got {keep_prob}"),
        ));
    }
    if base.n() < 2 || !base.is_strongly_connected() {
        return Err(Error::config("topology.base", "base graph is not strongly connected"));
    }
    if keep_prob == 1.0 {
        return Ok(base.clone());
    }
    let mut rng = rng::stream(seed, Domain::RoundGraph, &[t as u64]);
    let kept: Vec<_> = base.edges().filter(|_| rng.random_bool(keep_prob)).collect();
    let g = Digraph::from_edges(base.n(), kept)?;
    if g.is_strongly_connected() {
        return Ok(g);
    }
    let n = base.n();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let cycle: Vec<_> = (0..n).map(|k| (perm[k], perm[(k + 1) % n])).collect();
    if cycle.iter().all(|&(j, i)| base.has_edge(j, i)) {
        return Ok(g.union(cycle));
    }
    let root = rng.random_range(0..n);
    Ok(g.union(arborescence_edges(base, root)))
}

/// Edges of a BFS out-tree and a BFS in-tree rooted at `root`. Their union
/// is strongly connected whenever `g` is.
fn arborescence_edges(g: &Digraph, root: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for reverse in [false, true] {
        let mut seen = vec![false; g.n()];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let nbrs = if reverse { g.in_neighbors(u) } else { g.out_neighbors(u) };
            for &v in nbrs {
                if !seen[v] {
                    seen[v] = true;
                    edges.push(if reverse { (v, u) } else { (u, v) });
                    queue.push_back(v);
                }
            }
        }
    }
    edges
}
