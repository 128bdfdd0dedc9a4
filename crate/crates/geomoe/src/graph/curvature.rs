//! Graph sectional curvature from the parallelogram law.
//!
//! For a geodesic triangle (m; b, c) with b, c neighbors of m:
//!
//! ```text
//! κ(m; b, c) = (1/|V|) Σ_a [ g(a,m)² + g(b,c)²/4 − (g(a,b)² + g(a,c)²)/2 ]
//! ```
//!
//! where g is the hop distance. On disconnected graphs the sum runs over the
//! connected component of m with |V| replaced by the component size. All
//! distances are integers, so the sum is accumulated exactly in i64 and
//! divided once at the end.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{Graph, GraphError, UNREACHABLE};

pub fn sectional_curvature(g: &Graph, m: u32, b: u32, c: u32) -> Result<f64, GraphError> {
    if !g.has_edge(m, b) || !g.has_edge(m, c) {
        return Err(GraphError::Usage(format!(
            "sectional curvature needs b and c adjacent to m (m={m}, b={b}, c={c})"
        )));
    }
    let dm = g.bfs_from(m);
    let db = g.bfs_from(b);
    let dc = g.bfs_from(c);
    Ok(curvature_from_rows(&dm, &db, &dc, c))
}

/// Core computation shared with the brute-force oracle path. `dm`, `db`,
/// `dc` are BFS rows from m, b, c; nodes unreachable from m are skipped.
pub fn curvature_from_rows(dm: &[u32], db: &[u32], dc: &[u32], c: u32) -> f64 {
    let g_bc = db[c as usize] as i64;
    let mut sum: i64 = 0;
    let mut comp_size: i64 = 0;
    for a in 0..dm.len() {
        if dm[a] == UNREACHABLE {
            continue;
        }
        comp_size += 1;
        let am = dm[a] as i64;
        let ab = db[a] as i64;
        let ac = dc[a] as i64;
        // 4·g(a,m)² + g(b,c)² − 2·g(a,b)² − 2·g(a,c)², summed exactly.
        sum += 4 * am * am + g_bc * g_bc - 2 * ab * ab - 2 * ac * ac;
    }
    sum as f64 / (4.0 * comp_size as f64)
}

/// Histogram of sectional curvature over triangles (m; b, c). When the
/// total triangle count is at most `samples` every triangle is enumerated,
/// otherwise `samples` triangles are drawn (uniform eligible node, uniform
/// neighbor pair).
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureHistogram {
    pub bins: Vec<(f64, f64, usize)>,
    pub mean: f64,
    pub n_samples: usize,
    pub fraction_negative: f64,
    pub fraction_nonnegative: f64,
    /// True when no node has degree >= 2 and the histogram is empty.
    pub degenerate: bool,
}

pub const DEFAULT_CURVATURE_SAMPLES: usize = 10_000;
const HISTOGRAM_BINS: usize = 20;

pub fn curvature_histogram(
    g: &Graph,
    samples: Option<usize>,
    seed: u64,
) -> CurvatureHistogram {
    let budget = samples.unwrap_or(DEFAULT_CURVATURE_SAMPLES);
    let eligible: Vec<u32> =
        (0..g.n_nodes() as u32).filter(|&u| g.degree(u) >= 2).collect();
    if eligible.is_empty() {
        return CurvatureHistogram {
            bins: Vec::new(),
            mean: 0.0,
            n_samples: 0,
            fraction_negative: 0.0,
            fraction_nonnegative: 0.0,
            degenerate: true,
        };
    }

    let total_triangles: usize = eligible
        .iter()
        .map(|&u| {
            let d = g.degree(u);
            d * (d - 1) / 2
        })
        .sum();

    let mut cache: std::collections::HashMap<u32, std::rc::Rc<Vec<u32>>> =
        std::collections::HashMap::new();
    let cache_rows = g.n_nodes() <= 3000;
    let mut row = |g: &Graph, src: u32| -> std::rc::Rc<Vec<u32>> {
        if cache_rows {
            cache
                .entry(src)
                .or_insert_with(|| std::rc::Rc::new(g.bfs_from(src)))
                .clone()
        } else {
            std::rc::Rc::new(g.bfs_from(src))
        }
    };

    let mut values = Vec::new();
    if total_triangles <= budget {
        for &m in &eligible {
            let nbrs = g.neighbors(m).to_vec();
            for i in 0..nbrs.len() {
                for j in (i + 1)..nbrs.len() {
                    let (b, c) = (nbrs[i], nbrs[j]);
                    let dm = row(g, m);
                    let db = row(g, b);
                    let dc = row(g, c);
                    values.push(curvature_from_rows(&dm, &db, &dc, c));
                }
            }
        }
    } else {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for _ in 0..budget {
            let m = eligible[rng.gen_range(0..eligible.len())];
            let nbrs = g.neighbors(m);
            let i = rng.gen_range(0..nbrs.len());
            let j = {
                let mut j = rng.gen_range(0..nbrs.len() - 1);
                if j >= i {
                    j += 1;
                }
                j
            };
            let (b, c) = (nbrs[i], nbrs[j]);
            let dm = row(g, m);
            let db = row(g, b);
            let dc = row(g, c);
            values.push(curvature_from_rows(&dm, &db, &dc, c));
        }
    }

    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let negative = values.iter().filter(|&&v| v < 0.0).count();
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / HISTOGRAM_BINS as f64 } else { 1.0 };
    let mut bins: Vec<(f64, f64, usize)> = (0..HISTOGRAM_BINS)
        .map(|i| (lo + i as f64 * width, lo + (i + 1) as f64 * width, 0))
        .collect();
    for &v in &values {
        let idx = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
        bins[idx].2 += 1;
    }

    CurvatureHistogram {
        bins,
        mean,
        n_samples: n,
        fraction_negative: negative as f64 / n as f64,
        fraction_nonnegative: (n - negative) as f64 / n as f64,
        degenerate: false,
    }
}

impl CurvatureHistogram {
    /// CSV with header `bin_left,bin_right,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for (l, r, c) in &self.bins {
            out.push_str(&format!("{l},{r},{c}\n"));
        }
        out
    }
}
