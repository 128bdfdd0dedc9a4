//! Edge splits for link prediction: disjoint train/valid/test positives
//! covering the edge set, with matched equal-count negative sets drawn from
//! non-edges and kept disjoint across splits.
//!
//! A seeded spanning forest is preferred into the training set, so held-out
//! edges always leave an alternative path when one exists: message passing
//! and graph distances on the train graph stay defined for every test pair
//! in the same component. When a graph has too few cycle-closing edges to
//! fill the validation/test quotas, bridge edges are held out as a logged
//! fallback. Split sizes follow the ratios exactly either way.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{Graph, GraphError};

struct Dsu {
    parent: Vec<u32>,
}

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu { parent: (0..n as u32).collect() }
    }
    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }
    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra as usize] = rb;
        true
    }
}

#[derive(Clone, Debug)]
pub struct EdgeSplit {
    pub train_pos: Vec<(u32, u32)>,
    pub valid_pos: Vec<(u32, u32)>,
    pub test_pos: Vec<(u32, u32)>,
    pub train_neg: Vec<(u32, u32)>,
    pub valid_neg: Vec<(u32, u32)>,
    pub test_neg: Vec<(u32, u32)>,
}

pub fn split_edges(
    g: &Graph,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<EdgeSplit, GraphError> {
    let (r_train, r_valid, r_test) = ratios;
    let sum = r_train + r_valid + r_test;
    if (sum - 1.0).abs() > 1e-9 {
        return Err(GraphError::Usage(format!("split ratios must sum to 1, got {sum}")));
    }
    if r_train <= 0.0 || r_valid < 0.0 || r_test < 0.0 {
        return Err(GraphError::Usage("split ratios must be nonnegative with train > 0".into()));
    }

    let mut edges = g.edges();
    let e = edges.len();
    if e == 0 {
        return Err(GraphError::Usage("cannot split a graph with no edges".into()));
    }
    let n = g.n_nodes();
    let possible_pairs = n * (n - 1) / 2;
    if possible_pairs - e < e {
        return Err(GraphError::NegativeSampling(format!(
            "graph too dense: {e} edges but only {} non-edges available",
            possible_pairs - e
        )));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    edges.shuffle(&mut rng);

    let n_valid = (r_valid * e as f64).round() as usize;
    let n_test = (r_test * e as f64).round() as usize;
    let n_train = e - n_valid - n_test;

    // Spanning forest (in shuffled order) goes to training; the holdout
    // pool is everything that closes a cycle.
    let mut dsu = Dsu::new(n);
    let mut forest = Vec::new();
    let mut pool = Vec::new();
    for &(u, v) in &edges {
        if dsu.union(u, v) {
            forest.push((u, v));
        } else {
            pool.push((u, v));
        }
    }
    if pool.len() < n_valid + n_test {
        log::info!(
            "only {} cycle-closing edges for {} held-out slots; holding out bridges",
            pool.len(),
            n_valid + n_test
        );
    }
    let mut ordered = pool;
    ordered.extend(forest);

    let valid_pos = ordered[..n_valid].to_vec();
    let test_pos = ordered[n_valid..n_valid + n_test].to_vec();
    let train_pos = ordered[n_valid + n_test..].to_vec();
    debug_assert_eq!(train_pos.len(), n_train);

    // Negatives: uniform non-edges, disjoint across all three splits.
    let mut taken: std::collections::HashSet<(u32, u32)> = std::collections::HashSet::new();
    let draw = |count: usize,
                    rng: &mut ChaCha20Rng,
                    taken: &mut std::collections::HashSet<(u32, u32)>|
     -> Result<Vec<(u32, u32)>, GraphError> {
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        let max_attempts = 200 * count.max(1) + 1000;
        while out.len() < count {
            attempts += 1;
            if attempts > max_attempts {
                // Rejection stalled (dense or tiny graph): enumerate instead.
                let mut pool: Vec<(u32, u32)> = Vec::new();
                for u in 0..n as u32 {
                    for v in (u + 1)..n as u32 {
                        if !g.has_edge(u, v) && !taken.contains(&(u, v)) {
                            pool.push((u, v));
                        }
                    }
                }
                pool.shuffle(rng);
                if pool.len() < count - out.len() {
                    return Err(GraphError::NegativeSampling(format!(
                        "needed {} more negatives, only {} non-edges remain",
                        count - out.len(),
                        pool.len()
                    )));
                }
                for pair in pool.into_iter().take(count - out.len()) {
                    taken.insert(pair);
                    out.push(pair);
                }
                break;
            }
            let u = rng.gen_range(0..n as u32);
            let v = rng.gen_range(0..n as u32);
            if u == v {
                continue;
            }
            let key = if u < v { (u, v) } else { (v, u) };
            if g.has_edge(key.0, key.1) || taken.contains(&key) {
                continue;
            }
            taken.insert(key);
            out.push(key);
        }
        Ok(out)
    };

    let train_neg = draw(train_pos.len(), &mut rng, &mut taken)?;
    let valid_neg = draw(valid_pos.len(), &mut rng, &mut taken)?;
    let test_neg = draw(test_pos.len(), &mut rng, &mut taken)?;

    Ok(EdgeSplit { train_pos, valid_pos, test_pos, train_neg, valid_neg, test_neg })
}
