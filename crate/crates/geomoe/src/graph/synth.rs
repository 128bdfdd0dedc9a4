//! Synthetic graphs with topological heterogeneity: tree, cycle, and grid
//! substructures wired together by random inter-substructure edges.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Graph, GraphError};

/// One substructure of the mix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Substructure {
    /// Complete tree with `branching` children per internal node and `depth`
    /// edge levels; `branching = 1` degenerates to a path.
    Tree { branching: usize, depth: usize },
    Cycle { len: usize },
    Grid { rows: usize, cols: usize },
}

impl Substructure {
    pub fn n_nodes(&self) -> usize {
        match *self {
            Substructure::Tree { branching, depth } => {
                if branching == 1 {
                    depth + 1
                } else {
                    (branching.pow(depth as u32 + 1) - 1) / (branching - 1)
                }
            }
            Substructure::Cycle { len } => len,
            Substructure::Grid { rows, cols } => rows * cols,
        }
    }

    pub fn n_edges(&self) -> usize {
        match *self {
            Substructure::Tree { .. } => self.n_nodes() - 1,
            Substructure::Cycle { len } => len,
            Substructure::Grid { rows, cols } => rows * (cols - 1) + cols * (rows - 1),
        }
    }

    fn validate(&self) -> Result<(), GraphError> {
        match *self {
            Substructure::Tree { branching, depth } => {
                if branching < 1 || depth < 1 {
                    return Err(GraphError::BadSpec(format!(
                        "tree needs branching >= 1 and depth >= 1, got b={branching} h={depth}"
                    )));
                }
            }
            Substructure::Cycle { len } => {
                if len < 3 {
                    return Err(GraphError::BadSpec(format!("cycle length must be >= 3, got {len}")));
                }
            }
            Substructure::Grid { rows, cols } => {
                if rows < 2 || cols < 2 {
                    return Err(GraphError::BadSpec(format!(
                        "grid needs rows >= 2 and cols >= 2, got {rows}x{cols}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Full generation recipe: the substructures, how many random edges tie
/// them together, and the seed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub parts: Vec<Substructure>,
    pub inter_edges: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn total_nodes(&self) -> usize {
        self.parts.iter().map(|p| p.n_nodes()).sum()
    }

    /// Node id range of each part, in order.
    pub fn part_ranges(&self) -> Vec<std::ops::Range<u32>> {
        let mut out = Vec::with_capacity(self.parts.len());
        let mut start = 0u32;
        for p in &self.parts {
            let end = start + p.n_nodes() as u32;
            out.push(start..end);
            start = end;
        }
        out
    }

    /// Compiles a mix string like `tree:0.5,cycle:0.4,inter:0.1` into an
    /// explicit spec for about `n_nodes` nodes. Substructure fractions are
    /// normalized to partition the node budget; the `inter` fraction is
    /// taken as a fraction of `n_nodes` and converted to an edge count. A
    /// token may carry a size, `kind:fraction@size`: tree depth (default 4),
    /// cycle length (default 20), or square grid side (default 6).
    pub fn from_mix(n_nodes: usize, mix: &str, seed: u64) -> Result<SyntheticSpec, GraphError> {
        if n_nodes < 3 {
            return Err(GraphError::BadSpec("need at least 3 nodes".into()));
        }
        let mut tree = (0.0f64, 4usize);
        let mut cycle = (0.0f64, 20usize);
        let mut grid = (0.0f64, 6usize);
        let mut inter_frac = 0.0f64;
        for token in mix.split(',') {
            let token = token.trim();
            if token.is_empty() {
                continue;
            }
            let (kind, rest) = token.split_once(':').ok_or_else(|| {
                GraphError::BadSpec(format!("mix token `{token}` is not `kind:fraction`"))
            })?;
            let (frac_str, size) = match rest.split_once('@') {
                Some((f, s)) => {
                    let size: usize = s.parse().map_err(|e| {
                        GraphError::BadSpec(format!("bad size in `{token}`: {e}"))
                    })?;
                    (f, Some(size))
                }
                None => (rest, None),
            };
            let frac: f64 = frac_str
                .parse()
                .map_err(|e| GraphError::BadSpec(format!("bad fraction in `{token}`: {e}")))?;
            if !(0.0..=1.0).contains(&frac) {
                return Err(GraphError::BadSpec(format!(
                    "fraction in `{token}` must be in [0, 1]"
                )));
            }
            match kind.trim() {
                "tree" => tree = (frac, size.unwrap_or(tree.1)),
                "cycle" => cycle = (frac, size.unwrap_or(cycle.1)),
                "grid" => grid = (frac, size.unwrap_or(grid.1)),
                "inter" => inter_frac = frac,
                other => {
                    return Err(GraphError::BadSpec(format!("unknown mix kind `{other}`")))
                }
            }
        }
        if cycle.0 > 0.0 && cycle.1 < 3 {
            return Err(GraphError::BadSpec(format!(
                "cycle length must be >= 3, got {}",
                cycle.1
            )));
        }
        if tree.0 > 0.0 && tree.1 < 1 {
            return Err(GraphError::BadSpec("tree depth must be >= 1".into()));
        }
        if grid.0 > 0.0 && grid.1 < 2 {
            return Err(GraphError::BadSpec("grid side must be >= 2".into()));
        }
        let struct_total = tree.0 + cycle.0 + grid.0;
        if struct_total <= 0.0 {
            return Err(GraphError::BadSpec(
                "mix must request at least one of tree/cycle/grid".into(),
            ));
        }

        let n_tree = (n_nodes as f64 * tree.0 / struct_total).round() as usize;
        let n_grid = (n_nodes as f64 * grid.0 / struct_total).round() as usize;
        let n_cycle = n_nodes.saturating_sub(n_tree + n_grid);

        let mut parts = Vec::new();
        fill_trees(&mut parts, n_tree, tree.1);
        fill_grids(&mut parts, n_grid, grid.1);
        fill_cycles(&mut parts, n_cycle, cycle.1);

        let spec = SyntheticSpec {
            parts,
            inter_edges: (n_nodes as f64 * inter_frac).round() as usize,
            seed,
        };
        if spec.parts.is_empty() {
            return Err(GraphError::BadSpec("mix produced no substructures".into()));
        }
        Ok(spec)
    }
}

/// Packs a node budget with binary trees of the requested depth, absorbing
/// the remainder with a smaller tree or a path.
fn fill_trees(parts: &mut Vec<Substructure>, mut budget: usize, depth: usize) {
    let std_tree = Substructure::Tree { branching: 2, depth };
    while budget >= std_tree.n_nodes() {
        parts.push(std_tree);
        budget -= std_tree.n_nodes();
    }
    if budget >= 3 {
        // Largest complete binary tree that fits, path for the tail.
        let mut d = 1;
        while (1 << (d + 2)) - 1 <= budget {
            d += 1;
        }
        let t = Substructure::Tree { branching: 2, depth: d };
        parts.push(t);
        budget -= t.n_nodes();
        if budget >= 2 {
            parts.push(Substructure::Tree { branching: 1, depth: budget - 1 });
            budget = 0;
        }
    }
    if budget > 0 {
        if let Some(Substructure::Tree { branching: 1, depth: d }) = parts.last().copied() {
            *parts.last_mut().unwrap() = Substructure::Tree { branching: 1, depth: d + budget };
        } else if budget >= 2 {
            parts.push(Substructure::Tree { branching: 1, depth: budget - 1 });
        }
        // A single leftover node with no path to extend is dropped.
    }
}

fn fill_cycles(parts: &mut Vec<Substructure>, mut budget: usize, len: usize) {
    while budget >= len + 3 {
        parts.push(Substructure::Cycle { len });
        budget -= len;
    }
    if budget >= 3 {
        parts.push(Substructure::Cycle { len: budget });
    }
}

fn fill_grids(parts: &mut Vec<Substructure>, mut budget: usize, side: usize) {
    let std_grid = Substructure::Grid { rows: side, cols: side };
    while budget >= std_grid.n_nodes() {
        parts.push(std_grid);
        budget -= std_grid.n_nodes();
    }
    if budget >= 4 {
        let rows = 2;
        let cols = budget / rows;
        parts.push(Substructure::Grid { rows, cols });
    }
}

/// Generates the graph described by `spec`. Deterministic for a fixed spec
/// and seed: substructure edges are laid out analytically and the inter
/// edges come from a seeded generator.
pub fn generate_heterogeneous(spec: &SyntheticSpec) -> Result<Graph, GraphError> {
    for p in &spec.parts {
        p.validate()?;
    }
    if spec.inter_edges > 0 && spec.parts.len() < 2 {
        return Err(GraphError::BadSpec(
            "inter-substructure edges need at least two substructures".into(),
        ));
    }

    let ranges = spec.part_ranges();
    let n = spec.total_nodes();
    let mut edges: Vec<(u32, u32)> = Vec::new();

    for (part, range) in spec.parts.iter().zip(&ranges) {
        let base = range.start;
        match *part {
            Substructure::Tree { branching, depth } => {
                if branching == 1 {
                    for i in 0..depth as u32 {
                        edges.push((base + i, base + i + 1));
                    }
                } else {
                    let total = part.n_nodes() as u32;
                    for child in 1..total {
                        let parent = (child - 1) / branching as u32;
                        edges.push((base + parent, base + child));
                    }
                }
            }
            Substructure::Cycle { len } => {
                for i in 0..len as u32 {
                    edges.push((base + i, base + (i + 1) % len as u32));
                }
            }
            Substructure::Grid { rows, cols } => {
                for r in 0..rows {
                    for c in 0..cols {
                        let id = base + (r * cols + c) as u32;
                        if c + 1 < cols {
                            edges.push((id, id + 1));
                        }
                        if r + 1 < rows {
                            edges.push((id, id + cols as u32));
                        }
                    }
                }
            }
        }
    }

    // Random edges between distinct substructures, rejection-sampled so they
    // never duplicate an existing edge.
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut seen: std::collections::HashSet<(u32, u32)> = edges
        .iter()
        .map(|&(u, v)| if u < v { (u, v) } else { (v, u) })
        .collect();
    let mut placed = 0usize;
    let mut attempts = 0usize;
    let max_attempts = 1000 * spec.inter_edges.max(1);
    while placed < spec.inter_edges {
        attempts += 1;
        if attempts > max_attempts {
            return Err(GraphError::BadSpec(format!(
                "could not place {} inter edges (placed {placed})",
                spec.inter_edges
            )));
        }
        let pi = rng.gen_range(0..spec.parts.len());
        let pj = rng.gen_range(0..spec.parts.len());
        if pi == pj {
            continue;
        }
        let u = rng.gen_range(ranges[pi].clone());
        let v = rng.gen_range(ranges[pj].clone());
        let key = if u < v { (u, v) } else { (v, u) };
        if seen.insert(key) {
            edges.push(key);
            placed += 1;
        }
    }

    Graph::from_edges(n, &edges)
}

/// Structural node features for synthetic graphs: normalized degree,
/// normalized core number, a block of landmark-proximity channels
/// (`exp(-hops/3)` to seeded landmark nodes, the structural stand-in for a
/// global positional initializer), then seeded unit-Gaussian channels up to
/// `dim`.
pub fn structural_node_features(g: &Graph, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim >= 2, "feature dimension must be >= 2");
    let n = g.n_nodes();
    let max_deg = (0..n as u32).map(|u| g.degree(u)).max().unwrap_or(1).max(1) as f64;
    let cores = g.core_numbers();
    let max_core = cores.iter().copied().max().unwrap_or(1).max(1) as f64;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    let n_landmarks = (dim.saturating_sub(2)).min(16).min(n);
    let mut ids: Vec<u32> = (0..n as u32).collect();
    use rand::seq::SliceRandom;
    ids.shuffle(&mut rng);
    let landmark_rows: Vec<Vec<u32>> =
        ids.iter().take(n_landmarks).map(|&l| g.bfs_from(l)).collect();

    // Linear hop profiles: proximity 1 − h/h_max per landmark. Noise
    // channels only break structural symmetries (twin leaves), so they stay
    // quiet relative to the positional signal.
    const NOISE_SCALE: f64 = 0.05;
    let h_max: Vec<f64> = landmark_rows
        .iter()
        .map(|row| {
            row.iter()
                .filter(|&&h| h != super::UNREACHABLE)
                .map(|&h| h as f64)
                .fold(1.0, f64::max)
        })
        .collect();
    (0..n)
        .map(|u| {
            let mut row = Vec::with_capacity(dim);
            row.push(g.degree(u as u32) as f64 / max_deg);
            row.push(cores[u] as f64 / max_core);
            for (land, &hm) in landmark_rows.iter().zip(&h_max) {
                let hops = land[u];
                row.push(if hops == super::UNREACHABLE {
                    0.0
                } else {
                    1.0 - hops as f64 / hm
                });
            }
            while row.len() < dim {
                let z: f64 = StandardNormal.sample(&mut rng);
                row.push(NOISE_SCALE * z);
            }
            row.truncate(dim);
            row
        })
        .collect()
}
