//! Immutable undirected graph storage plus the structural algorithms the
//! rest of the crate builds on: BFS distances, connected components, and
//! k-core numbers.

pub mod curvature;
pub mod io;
pub mod sample;
pub mod split;
pub mod synth;

use thiserror::Error;

/// Hop-distance sentinel for unreachable nodes.
pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("ingestion error at {path}:{line}: {detail}")]
    Ingestion { path: String, line: usize, detail: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("invalid synthetic spec: {0}")]
    BadSpec(String),
    #[error("negative sampling exhausted: {0}")]
    NegativeSampling(String),
}

/// Undirected graph with dense 0..N ids, sorted deduplicated adjacency,
/// optional node features, and optional class labels.
#[derive(Clone, Debug)]
pub struct Graph {
    adj: Vec<Vec<u32>>,
    features: Option<Vec<Vec<f64>>>,
    labels: Option<Vec<Option<u32>>>,
}

impl Graph {
    /// Builds from an edge list. Self-loops are dropped and duplicate or
    /// reversed edges deduplicated; both are counted in the returned stats.
    pub fn from_edges(n_nodes: usize, edges: &[(u32, u32)]) -> Result<Graph, GraphError> {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n_nodes];
        let mut self_loops = 0usize;
        for &(u, v) in edges {
            if u as usize >= n_nodes || v as usize >= n_nodes {
                return Err(GraphError::Usage(format!(
                    "edge ({u}, {v}) out of range for {n_nodes} nodes"
                )));
            }
            if u == v {
                self_loops += 1;
                continue;
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        let mut dups = 0usize;
        for list in adj.iter_mut() {
            let before = list.len();
            list.sort_unstable();
            list.dedup();
            dups += before - list.len();
        }
        if self_loops > 0 || dups > 0 {
            log::debug!("graph ingest: dropped {self_loops} self-loops, {} duplicate edges", dups / 2);
        }
        Ok(Graph { adj, features: None, labels: None })
    }

    pub fn n_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(|l| l.len()).sum::<usize>() / 2
    }

    pub fn neighbors(&self, u: u32) -> &[u32] {
        &self.adj[u as usize]
    }

    pub fn degree(&self, u: u32) -> usize {
        self.adj[u as usize].len()
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    /// Edges as (u, v) with u < v, ascending.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.n_edges());
        for (u, list) in self.adj.iter().enumerate() {
            for &v in list {
                if (u as u32) < v {
                    out.push((u as u32, v));
                }
            }
        }
        out
    }

    pub fn features(&self) -> Option<&Vec<Vec<f64>>> {
        self.features.as_ref()
    }

    pub fn set_features(&mut self, features: Vec<Vec<f64>>) -> Result<(), GraphError> {
        if features.len() != self.n_nodes() {
            return Err(GraphError::Usage(format!(
                "feature matrix has {} rows for {} nodes",
                features.len(),
                self.n_nodes()
            )));
        }
        if let Some(d) = features.first().map(|r| r.len()) {
            if let Some(bad) = features.iter().position(|r| r.len() != d) {
                return Err(GraphError::Usage(format!(
                    "feature row {bad} has length {} != {d}",
                    features[bad].len()
                )));
            }
        }
        self.features = Some(features);
        Ok(())
    }

    pub fn labels(&self) -> Option<&Vec<Option<u32>>> {
        self.labels.as_ref()
    }

    pub fn set_labels(&mut self, labels: Vec<Option<u32>>) -> Result<(), GraphError> {
        if labels.len() != self.n_nodes() {
            return Err(GraphError::Usage(format!(
                "label vector has {} entries for {} nodes",
                labels.len(),
                self.n_nodes()
            )));
        }
        self.labels = Some(labels);
        Ok(())
    }

    /// BFS hop distances from `source`; unreachable nodes get [`UNREACHABLE`].
    pub fn bfs_from(&self, source: u32) -> Vec<u32> {
        assert!((source as usize) < self.n_nodes(), "bfs source out of range");
        let mut dist = vec![UNREACHABLE; self.n_nodes()];
        let mut queue = std::collections::VecDeque::new();
        dist[source as usize] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            for &v in self.neighbors(u) {
                if dist[v as usize] == UNREACHABLE {
                    dist[v as usize] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Component id per node, ids assigned in ascending order of the
    /// component's smallest node.
    pub fn components(&self) -> Vec<u32> {
        let mut comp = vec![u32::MAX; self.n_nodes()];
        let mut next = 0u32;
        for start in 0..self.n_nodes() as u32 {
            if comp[start as usize] != u32::MAX {
                continue;
            }
            let mut stack = vec![start];
            comp[start as usize] = next;
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if comp[v as usize] == u32::MAX {
                        comp[v as usize] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// k-core number per node via the standard peeling order.
    pub fn core_numbers(&self) -> Vec<u32> {
        let n = self.n_nodes();
        let mut deg: Vec<usize> = (0..n).map(|u| self.adj[u].len()).collect();
        let max_deg = deg.iter().copied().max().unwrap_or(0);
        let mut bins: Vec<Vec<u32>> = vec![Vec::new(); max_deg + 1];
        for (u, &d) in deg.iter().enumerate() {
            bins[d].push(u as u32);
        }
        let mut core = vec![0u32; n];
        let mut removed = vec![false; n];
        let mut k = 0usize;
        for _ in 0..n {
            let u = loop {
                let d = (0..bins.len()).find(|&d| !bins[d].is_empty());
                let d = match d {
                    Some(d) => d,
                    None => return core,
                };
                let u = bins[d].pop().unwrap();
                if !removed[u as usize] && deg[u as usize] == d {
                    break u;
                }
            };
            k = k.max(deg[u as usize]);
            core[u as usize] = k as u32;
            removed[u as usize] = true;
            for &v in self.neighbors(u) {
                if !removed[v as usize] {
                    deg[v as usize] -= 1;
                    bins[deg[v as usize]].push(v);
                }
            }
        }
        core
    }
}
