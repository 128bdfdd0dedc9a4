//! Mixture and alignment of experts.
//!
//! Per node, expert outputs are fused into a personalized mixed-curvature
//! embedding by geodesic scaling with the gating weights. Per node pair,
//! the two gating rows are aligned (softmax of their elementwise product)
//! and the pair's squared distance is the aligned-weight blend of the
//! per-expert squared geodesic distances between the raw expert outputs.
//! A Fermi-Dirac decoder turns squared distances into edge probabilities.

use std::io::Write;
use std::path::Path;

use crate::autodiff::{NodeId, Result as AdResult, Tape};
use crate::manifold::tape::TapeSpace;
use crate::manifold::{ManifoldError, ManifoldSpace};

/// Mixed embedding: for each node, K manifold segments, segment k scaled by
/// that node's weight for expert k. With a one-hot weight row the matching
/// segment is the raw expert output and all other segments sit at the origin.
pub type MixedEmbeddings = Vec<Vec<Vec<f64>>>;

/// Default Fermi-Dirac decoder radius and temperature.
pub const DEFAULT_FERMI_DIRAC_R: f64 = 2.0;
pub const DEFAULT_FERMI_DIRAC_T: f64 = 1.0;

// ---- pure (inference/eval) path -------------------------------------------

/// `Z_v` segments for all nodes: segment k = `kappa_scale(W_v[k], z[k][v])`.
/// `z` is indexed `[expert][node]`, weights `[node][expert]`.
pub fn mix_embeddings(
    spaces: &[ManifoldSpace],
    z: &[Vec<Vec<f64>>],
    weights: &[Vec<f64>],
) -> MixedEmbeddings {
    let k = spaces.len();
    assert_eq!(z.len(), k, "expert outputs must match space count");
    let n = weights.len();
    (0..n)
        .map(|v| {
            (0..k)
                .map(|e| spaces[e].kappa_scale(weights[v][e], &z[e][v]))
                .collect()
        })
        .collect()
}

/// Aligned pair weights `softmax((W_u ⊙ W_v)/τ)`. Symmetric in (u, v);
/// note a one-hot pair does not stay one-hot, which is inherited from the
/// alignment rule itself.
pub fn align_weights(w_u: &[f64], w_v: &[f64], tau: f64) -> Vec<f64> {
    assert_eq!(w_u.len(), w_v.len());
    assert!(tau > 0.0, "alignment temperature must be positive");
    let prod: Vec<f64> = w_u.iter().zip(w_v).map(|(a, b)| a * b / tau).collect();
    softmax(&prod)
}

fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Blended squared distance between u and v:
/// `d²(u,v) = Σ_k aligned[k] · d²_k(z[k][u], z[k][v])` over the raw
/// (pre-scaling) expert outputs.
pub fn pairwise_distance_sq(
    spaces: &[ManifoldSpace],
    z_u: &[&[f64]],
    z_v: &[&[f64]],
    aligned: &[f64],
) -> Result<f64, ManifoldError> {
    debug_assert_eq!(spaces.len(), aligned.len());
    let mut total = 0.0;
    for ((space, w), (zu, zv)) in spaces.iter().zip(aligned).zip(z_u.iter().zip(z_v)) {
        let d = space.dist(zu, zv)?;
        total += w * d * d;
    }
    Ok(total)
}

/// Fermi-Dirac decoder `p = 1 / (exp((d² − r)/t) + 1)`, strictly decreasing
/// in the squared distance.
pub fn edge_probability(d_sq: f64, r_fd: f64, t_fd: f64) -> f64 {
    assert!(t_fd > 0.0, "decoder temperature must be positive");
    1.0 / (((d_sq - r_fd) / t_fd).exp() + 1.0)
}

// ---- tape (training) path --------------------------------------------------

pub fn align_weights_t(tape: &mut Tape, w_u: NodeId, w_v: NodeId, tau: f64) -> NodeId {
    assert!(tau > 0.0, "alignment temperature must be positive");
    let prod = tape.mul_elem(w_u, w_v);
    let scaled = tape.mul_const(prod, 1.0 / tau);
    tape.softmax(scaled)
}

/// Per-expert squared distances concatenated and dotted with the aligned
/// weights. `z_u`/`z_v` hold one output node per expert.
pub fn pairwise_distance_sq_t(
    tape: &mut Tape,
    spaces: &[TapeSpace],
    z_u: &[NodeId],
    z_v: &[NodeId],
    aligned: NodeId,
) -> AdResult<NodeId> {
    let d2s: Vec<NodeId> = spaces
        .iter()
        .zip(z_u.iter().zip(z_v))
        .map(|(space, (&zu, &zv))| space.dist_sq(tape, zu, zv))
        .collect::<AdResult<_>>()?;
    let stacked = tape.concat(&d2s);
    Ok(tape.dot(stacked, aligned))
}

pub fn edge_probability_t(
    tape: &mut Tape,
    d_sq: NodeId,
    r_fd: f64,
    t_fd: f64,
) -> AdResult<NodeId> {
    assert!(t_fd > 0.0, "decoder temperature must be positive");
    let shifted = tape.add_const(d_sq, -r_fd);
    let scaled = tape.mul_const(shifted, 1.0 / t_fd);
    let e = tape.exp(scaled);
    let den = tape.add_const(e, 1.0);
    let one = tape.scalar(1.0);
    tape.div_scalar(one, den)
}

/// Mixed segments for one node on the tape (feeds the classification head).
pub fn mix_embeddings_node_t(
    tape: &mut Tape,
    spaces: &[TapeSpace],
    z_v: &[NodeId],
    w_v: NodeId,
) -> AdResult<Vec<NodeId>> {
    spaces
        .iter()
        .enumerate()
        .map(|(k, space)| {
            let wk = tape.index(w_v, k);
            space.kappa_scale(tape, wk, z_v[k])
        })
        .collect()
}

/// Classifier input for one node: each mixed segment log-mapped to its
/// tangent space, concatenated into a K·d_out Euclidean vector.
pub fn classifier_input_t(
    tape: &mut Tape,
    spaces: &[TapeSpace],
    segments: &[NodeId],
) -> AdResult<NodeId> {
    let tangents: Vec<NodeId> = spaces
        .iter()
        .zip(segments)
        .map(|(space, &seg)| space.log0(tape, seg))
        .collect::<AdResult<_>>()?;
    Ok(tape.concat(&tangents))
}

// ---- export ---------------------------------------------------------------

/// Per-node embedding rows `node_id,expert_id,kappa,c0..c{d-1}` as CSV.
pub fn export_embeddings_csv(
    path: &Path,
    spaces: &[ManifoldSpace],
    z: &[Vec<Vec<f64>>],
) -> std::io::Result<()> {
    let d_out = z.first().and_then(|e| e.first()).map(|p| p.len()).unwrap_or(0);
    let mut out = String::from("node_id,expert_id,kappa");
    for i in 0..d_out {
        out.push_str(&format!(",c{i}"));
    }
    out.push('\n');
    let n = z.first().map(|e| e.len()).unwrap_or(0);
    for v in 0..n {
        for (k, space) in spaces.iter().enumerate() {
            out.push_str(&format!("{v},{k},{}", space.kappa));
            for c in &z[k][v] {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())
}

/// Gating rows `node_id,w_1..w_K` as CSV.
pub fn export_gating_csv(path: &Path, weights: &[Vec<f64>]) -> std::io::Result<()> {
    let k = weights.first().map(|w| w.len()).unwrap_or(0);
    let mut out = String::from("node_id");
    for i in 1..=k {
        out.push_str(&format!(",w_{i}"));
    }
    out.push('\n');
    for (v, row) in weights.iter().enumerate() {
        out.push_str(&format!("{v}"));
        for w in row {
            out.push_str(&format!(",{w}"));
        }
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())
}
