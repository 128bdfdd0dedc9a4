//! Evaluation metrics (AUC, average precision, F1 family, average embedding
//! distortion) and machine-readable report emission.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, UNREACHABLE};
use crate::manifold::{ManifoldError, ManifoldSpace};
use crate::mixture;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("undefined metric: {0}")]
    Undefined(String),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("report parse error: {0}")]
    Parse(String),
}

/// Area under the ROC curve as the Mann–Whitney rank statistic; tied scores
/// contribute half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::Undefined(
            "AUC needs both classes present".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("scores must be orderable"));

    // Midranks over tie groups (1-based ranks).
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Step-wise average precision: mean over positives of precision at their
/// rank, scores sorted descending (ties broken by original index).
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return Err(MetricError::Undefined("AP needs at least one positive".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores must be orderable")
            .then(a.cmp(&b))
    });
    let mut hits = 0usize;
    let mut sum = 0.0f64;
    for (k, &idx) in order.iter().enumerate() {
        if labels[idx] {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(sum / n_pos as f64)
}

/// `(weighted F1, macro F1)` with the 0-convention for empty denominators.
pub fn f1_scores(pred: &[u32], labels: &[u32]) -> (f64, f64) {
    assert_eq!(pred.len(), labels.len());
    let mut classes: Vec<u32> = labels.iter().chain(pred.iter()).copied().collect();
    classes.sort_unstable();
    classes.dedup();
    let mut macro_sum = 0.0;
    let mut weighted_sum = 0.0;
    let mut support_total = 0usize;
    for &c in &classes {
        let tp = pred.iter().zip(labels).filter(|&(&p, &l)| p == c && l == c).count() as f64;
        let fp = pred.iter().zip(labels).filter(|&(&p, &l)| p == c && l != c).count() as f64;
        let fn_ = pred.iter().zip(labels).filter(|&(&p, &l)| p != c && l == c).count() as f64;
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let support = labels.iter().filter(|&&l| l == c).count();
        macro_sum += f1;
        weighted_sum += support as f64 * f1;
        support_total += support;
    }
    let macro_f1 = macro_sum / classes.len() as f64;
    let weighted_f1 =
        if support_total > 0 { weighted_sum / support_total as f64 } else { 0.0 };
    (weighted_f1, macro_f1)
}

/// Micro-averaged F1; for single-label multiclass this equals accuracy.
pub fn micro_f1(pred: &[u32], labels: &[u32]) -> f64 {
    assert_eq!(pred.len(), labels.len());
    if pred.is_empty() {
        return 0.0;
    }
    let correct = pred.iter().zip(labels).filter(|&(p, l)| p == l).count();
    correct as f64 / pred.len() as f64
}

// ---- average distortion -----------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairMode {
    /// Exact full-pair evaluation.
    Full,
    /// Landmark-sampled pairs.
    Sampled,
    /// Full for graphs up to 2000 nodes, sampled beyond.
    Auto,
}

#[derive(Clone, Debug)]
pub struct DistortionOptions {
    pub mode: PairMode,
    pub budget: usize,
    pub seed: u64,
    pub tau: f64,
}

impl Default for DistortionOptions {
    fn default() -> Self {
        DistortionOptions { mode: PairMode::Auto, budget: 100_000, seed: 0, tau: 1.0 }
    }
}

#[derive(Clone, Debug)]
pub struct DistortionReport {
    pub mean: f64,
    /// Per-node mean distortion over the pairs that touched the node; NaN
    /// for nodes no sampled pair touched.
    pub per_node: Vec<f64>,
    pub n_pairs: usize,
    pub sampled: bool,
    pub components: usize,
}

const FULL_PAIR_NODE_LIMIT: usize = 2000;

/// Mean of `|d²(u,v)/g(u,v)² − 1|` over same-component node pairs, given
/// per-expert embeddings `z[expert][node]` and gating rows.
pub fn average_distortion(
    spaces: &[ManifoldSpace],
    z: &[Vec<Vec<f64>>],
    gates: &[Vec<f64>],
    g: &Graph,
    opts: &DistortionOptions,
) -> Result<DistortionReport, MetricError> {
    let n = g.n_nodes();
    if n < 2 {
        return Err(MetricError::Undefined("distortion needs at least two nodes".into()));
    }
    let components = {
        let comp = g.components();
        (comp.iter().copied().max().unwrap_or(0) + 1) as usize
    };
    if components > 1 {
        log::info!("distortion over a disconnected graph: {components} components, cross-component pairs skipped");
    }
    let full = match opts.mode {
        PairMode::Full => true,
        PairMode::Sampled => false,
        PairMode::Auto => n <= FULL_PAIR_NODE_LIMIT,
    };

    let pair_term = |u: usize, v: usize, g_dist: u32| -> Result<f64, ManifoldError> {
        let aligned = mixture::align_weights(&gates[u], &gates[v], opts.tau);
        let zu: Vec<&[f64]> = z.iter().map(|ze| ze[u].as_slice()).collect();
        let zv: Vec<&[f64]> = z.iter().map(|ze| ze[v].as_slice()).collect();
        let d_sq = mixture::pairwise_distance_sq(spaces, &zu, &zv, &aligned)?;
        let gd = g_dist as f64;
        Ok((d_sq / (gd * gd) - 1.0).abs())
    };

    if full {
        // One BFS row per source; row results collected in index order so
        // the reduction is deterministic regardless of thread count.
        let rows: Vec<Result<(f64, usize, f64, usize), ManifoldError>> = (0..n)
            .into_par_iter()
            .map(|u| {
                let dist_row = g.bfs_from(u as u32);
                let mut sum = 0.0;
                let mut count = 0usize;
                for v in 0..n {
                    if v == u || dist_row[v] == UNREACHABLE {
                        continue;
                    }
                    sum += pair_term(u, v, dist_row[v])?;
                    count += 1;
                }
                let node_mean = if count > 0 { sum / count as f64 } else { f64::NAN };
                Ok((sum, count, node_mean, u))
            })
            .collect();
        let mut total = 0.0;
        let mut pairs = 0usize;
        let mut per_node = vec![f64::NAN; n];
        for row in rows {
            let (sum, count, node_mean, u) = row?;
            total += sum;
            pairs += count;
            per_node[u] = node_mean;
        }
        if pairs == 0 {
            return Err(MetricError::Undefined("no evaluable node pairs".into()));
        }
        Ok(DistortionReport {
            mean: total / pairs as f64,
            per_node,
            n_pairs: pairs / 2,
            sampled: false,
            components,
        })
    } else {
        log::info!("distortion sampled with budget {}", opts.budget);
        let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
        let n_landmarks = 512.min(n);
        let mut ids: Vec<u32> = (0..n as u32).collect();
        use rand::seq::SliceRandom;
        ids.shuffle(&mut rng);
        ids.truncate(n_landmarks);
        let rows: Vec<(u32, Vec<u32>, Vec<u32>)> = ids
            .iter()
            .map(|&u| {
                let row = g.bfs_from(u);
                let targets: Vec<u32> = (0..n as u32)
                    .filter(|&v| v != u && row[v as usize] != UNREACHABLE)
                    .collect();
                (u, row, targets)
            })
            .filter(|(_, _, t)| !t.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(MetricError::Undefined("no evaluable node pairs".into()));
        }
        let mut total = 0.0;
        let mut node_sum = vec![0.0f64; n];
        let mut node_count = vec![0usize; n];
        let mut pairs = 0usize;
        for _ in 0..opts.budget {
            let (u, row, targets) = &rows[rng.gen_range(0..rows.len())];
            let v = targets[rng.gen_range(0..targets.len())];
            let term = pair_term(*u as usize, v as usize, row[v as usize])?;
            total += term;
            pairs += 1;
            node_sum[*u as usize] += term;
            node_count[*u as usize] += 1;
            node_sum[v as usize] += term;
            node_count[v as usize] += 1;
        }
        let per_node = node_sum
            .iter()
            .zip(&node_count)
            .map(|(&s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
            .collect();
        Ok(DistortionReport {
            mean: total / pairs as f64,
            per_node,
            n_pairs: pairs,
            sampled: true,
            components,
        })
    }
}

// ---- report emission --------------------------------------------------------

/// Machine-readable run summary. Fields serialize in declaration order,
/// so emission is byte-stable.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub task: String,
    pub auc: Option<f64>,
    pub ap: Option<f64>,
    pub weighted_f1: Option<f64>,
    pub macro_f1: Option<f64>,
    pub micro_f1: Option<f64>,
    pub avg_distortion: f64,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub seed: u64,
    pub config: String,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub task_loss: f64,
    pub distortion_loss: f64,
    pub val_metric: f64,
}

pub fn curves_csv(rows: &[EpochRow]) -> String {
    let mut out = String::from("epoch,task_loss,distortion_loss,val_metric\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6}\n",
            r.epoch, r.task_loss, r.distortion_loss, r.val_metric
        ));
    }
    out
}

/// Writes `report.json`, `curves.csv`, and `per_node_distortion.csv` into
/// `run_dir`. Re-emitting the same report is byte-identical.
pub fn emit_report(
    report: &EvalReport,
    curves: &[EpochRow],
    per_node_distortion: &[f64],
    run_dir: &Path,
) -> Result<(), MetricError> {
    let io_err = |path: &Path, e: std::io::Error| MetricError::Io {
        path: path.display().to_string(),
        source: e,
    };
    std::fs::create_dir_all(run_dir).map_err(|e| io_err(run_dir, e))?;

    let report_path = run_dir.join("report.json");
    let json = serde_json::to_string_pretty(report).map_err(|e| MetricError::Parse(format!("{e}")))?;
    std::fs::write(&report_path, json).map_err(|e| io_err(&report_path, e))?;

    let curves_path = run_dir.join("curves.csv");
    std::fs::write(&curves_path, curves_csv(curves)).map_err(|e| io_err(&curves_path, e))?;

    let pnd_path = run_dir.join("per_node_distortion.csv");
    let mut out = String::from("node_id,distortion\n");
    for (i, &d) in per_node_distortion.iter().enumerate() {
        if d.is_finite() {
            out.push_str(&format!("{i},{d}\n"));
        }
    }
    std::fs::write(&pnd_path, out).map_err(|e| io_err(&pnd_path, e))?;
    Ok(())
}

pub fn parse_report(path: &Path) -> Result<EvalReport, MetricError> {
    let text = std::fs::read_to_string(path).map_err(|e| MetricError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| MetricError::Parse(format!("{e}")))
}
