//! Loss terms: embedding distortion, link-prediction binary cross-entropy
//! over the Fermi-Dirac decoder, node-classification cross-entropy behind a
//! small mean-aggregation GNN head, and their affine combination.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::autodiff::{NodeId, ParamId, ParamKind, ParamStore, Result as AdResult, Tape, Value};
use crate::experts::glorot;
use crate::graph::{Graph, UNREACHABLE};
use crate::mixture;

use super::TrainingError;

const PROB_FLOOR: f64 = 1e-12;

/// Mean over evaluated pairs of `|d²(i,j)/g(i,j)² − 1|`. Every pair must
/// carry a finite positive graph distance; anything else is a contract
/// violation upstream of this op.
pub fn distortion_loss_t(
    tape: &mut Tape,
    pairs: &[(NodeId, u32)],
) -> Result<NodeId, TrainingError> {
    if pairs.is_empty() {
        return Err(TrainingError::ContractViolation(
            "distortion loss needs at least one pair".into(),
        ));
    }
    let mut terms = Vec::with_capacity(pairs.len());
    for &(d_sq, g_dist) in pairs {
        if g_dist == 0 || g_dist == UNREACHABLE {
            return Err(TrainingError::ContractViolation(format!(
                "distortion pair with graph distance {g_dist}"
            )));
        }
        let inv_g_sq = 1.0 / (g_dist as f64 * g_dist as f64);
        let ratio = tape.mul_const(d_sq, inv_g_sq);
        let shifted = tape.add_const(ratio, -1.0);
        terms.push(tape.abs(shifted));
    }
    Ok(tape.mean_many(&terms))
}

/// Mean binary cross-entropy of decoder probabilities against edge labels
/// (1 for positives, 0 for negatives). Probabilities are clamped to
/// `[1e-12, 1 − 1e-12]` before the logarithm.
pub fn link_prediction_loss_t(
    tape: &mut Tape,
    pos_d_sq: &[NodeId],
    neg_d_sq: &[NodeId],
    fd_r: f64,
    fd_t: f64,
) -> AdResult<NodeId> {
    assert!(
        !pos_d_sq.is_empty() || !neg_d_sq.is_empty(),
        "link prediction loss needs at least one pair"
    );
    let mut terms = Vec::with_capacity(pos_d_sq.len() + neg_d_sq.len());
    for &d_sq in pos_d_sq {
        let p = mixture::edge_probability_t(tape, d_sq, fd_r, fd_t)?;
        let clamped = clamp_prob(tape, p);
        let lp = tape.ln(clamped)?;
        terms.push(tape.neg(lp));
    }
    for &d_sq in neg_d_sq {
        let p = mixture::edge_probability_t(tape, d_sq, fd_r, fd_t)?;
        let neg_p = tape.neg(p);
        let q = tape.add_const(neg_p, 1.0);
        let clamped = clamp_prob(tape, q);
        let lq = tape.ln(clamped)?;
        terms.push(tape.neg(lq));
    }
    Ok(tape.mean_many(&terms))
}

fn clamp_prob(tape: &mut Tape, p: NodeId) -> NodeId {
    let lo = tape.clamp_min(p, PROB_FLOOR);
    tape.clamp_max(lo, 1.0 - PROB_FLOOR)
}

/// The 2-layer mean-aggregation GNN classification head consuming the
/// log-mapped concatenated mixed embeddings.
#[derive(Clone, Debug)]
pub struct ClassifierHead {
    pub n_classes: usize,
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

pub fn init_classifier_head(
    store: &mut ParamStore,
    in_dim: usize,
    d_h: usize,
    n_classes: usize,
    seed: u64,
) -> ClassifierHead {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let w1 = store.register("head/layer_1/w", glorot(&mut rng, d_h, in_dim), ParamKind::Weight, true);
    let b1 = store.register("head/layer_1/b", Value::vector(vec![0.0; d_h]), ParamKind::Bias, true);
    let w2 =
        store.register("head/layer_2/w", glorot(&mut rng, n_classes, d_h), ParamKind::Weight, true);
    let b2 =
        store.register("head/layer_2/b", Value::vector(vec![0.0; n_classes]), ParamKind::Bias, true);
    ClassifierHead { n_classes, w1, b1, w2, b2 }
}

impl ClassifierHead {
    /// Per-node class logits from per-node Euclidean inputs.
    pub fn forward_t(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        g: &Graph,
        inputs: &[NodeId],
    ) -> Vec<NodeId> {
        let w1 = tape.param(store, self.w1);
        let b1 = tape.param(store, self.b1);
        let w2 = tape.param(store, self.w2);
        let b2 = tape.param(store, self.b2);
        let mut h = inputs.to_vec();
        for (layer, (w, b)) in [(w1, b1), (w2, b2)].iter().enumerate() {
            let mut next = Vec::with_capacity(h.len());
            for u in 0..g.n_nodes() as u32 {
                let mut members = vec![h[u as usize]];
                members.extend(g.neighbors(u).iter().map(|&v| h[v as usize]));
                let agg = tape.mean_many(&members);
                let lin = tape.matvec(*w, agg);
                let pre = tape.add(lin, *b);
                next.push(if layer == 0 { tape.relu(pre) } else { pre });
            }
            h = next;
        }
        h
    }
}

/// Cross-entropy over the masked nodes. Every masked node must be labeled.
pub fn node_classification_loss_t(
    tape: &mut Tape,
    logits: &[NodeId],
    labels: &[Option<u32>],
    mask: &[u32],
) -> Result<NodeId, TrainingError> {
    if mask.is_empty() {
        return Err(TrainingError::ContractViolation(
            "classification loss needs a nonempty node mask".into(),
        ));
    }
    let mut terms = Vec::with_capacity(mask.len());
    for &u in mask {
        let label = labels[u as usize].ok_or_else(|| {
            TrainingError::Usage(format!("node {u} is in the training mask but unlabeled"))
        })?;
        let probs = tape.softmax(logits[u as usize]);
        let picked = tape.index(probs, label as usize);
        let clamped = tape.clamp_min(picked, PROB_FLOOR);
        let lp = tape.ln(clamped).map_err(TrainingError::Autodiff)?;
        terms.push(tape.neg(lp));
    }
    Ok(tape.mean_many(&terms))
}

/// `L = L_task + λ·L_D`, exactly; with λ = 0 or no distortion term the task
/// loss passes through untouched.
pub fn total_loss_t(
    tape: &mut Tape,
    task: NodeId,
    distortion: Option<NodeId>,
    lambda: f64,
) -> NodeId {
    match distortion {
        Some(d) if lambda != 0.0 => {
            let scaled = tape.mul_const(d, lambda);
            tape.add(task, scaled)
        }
        _ => task,
    }
}
