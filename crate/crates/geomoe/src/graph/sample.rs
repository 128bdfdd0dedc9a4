//! Ego-network subgraph sampling, the concrete local-topology sampler.
//! Sampling is deterministic: an ego net is fully determined by the graph,
//! the center, and the radius.

use super::Graph;

/// An induced subgraph around a center node. Nodes are global ids in
/// ascending order; edges use local indices into that list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgraph {
    pub center: u32,
    pub radius: usize,
    /// Global node ids, ascending.
    pub nodes: Vec<u32>,
    /// Induced edges as (local u, local v) with u < v, ascending.
    pub edges: Vec<(u32, u32)>,
    /// Index of the center within `nodes`.
    pub center_local: usize,
}

impl Subgraph {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Degree of each local node inside the subgraph.
    pub fn local_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.nodes.len()];
        for &(u, v) in &self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg
    }

    /// Local adjacency lists (sorted).
    pub fn local_adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for l in adj.iter_mut() {
            l.sort_unstable();
        }
        adj
    }
}

/// Induced ego network of radius `r` around `v`.
pub fn sample_ego(g: &Graph, v: u32, r: usize) -> Subgraph {
    assert!((v as usize) < g.n_nodes(), "ego center out of range");
    assert!(r >= 1, "ego radius must be >= 1");

    // Bounded BFS collecting nodes within r hops.
    let mut dist: std::collections::HashMap<u32, usize> = std::collections::HashMap::new();
    let mut queue = std::collections::VecDeque::new();
    dist.insert(v, 0);
    queue.push_back(v);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        if du == r {
            continue;
        }
        for &w in g.neighbors(u) {
            if !dist.contains_key(&w) {
                dist.insert(w, du + 1);
                queue.push_back(w);
            }
        }
    }

    let mut nodes: Vec<u32> = dist.keys().copied().collect();
    nodes.sort_unstable();
    let center_local = nodes.binary_search(&v).expect("center is in its own ego net");

    let mut edges = Vec::new();
    for (lu, &u) in nodes.iter().enumerate() {
        for &w in g.neighbors(u) {
            if w > u {
                if let Ok(lw) = nodes.binary_search(&w) {
                    edges.push((lu as u32, lw as u32));
                }
            }
        }
    }

    Subgraph { center: v, radius: r, nodes, edges, center_local }
}

/// One ego net per radius, ascending. Later subgraphs contain earlier ones.
pub fn sample_multi_resolution(g: &Graph, v: u32, radii: &[usize]) -> Vec<Subgraph> {
    assert!(!radii.is_empty(), "radius set must be nonempty");
    assert!(
        radii.windows(2).all(|w| w[0] < w[1]),
        "radius set must be sorted ascending"
    );
    radii.iter().map(|&r| sample_ego(g, v, r)).collect()
}
