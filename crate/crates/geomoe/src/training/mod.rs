//! End-to-end training: model assembly, the per-epoch loop (expert
//! forwards, topology characterizations, gating, pair alignment and
//! distances, one optimizer update), early stopping on the validation
//! metric, and post-training evaluation.
//!
//! Subgraph sampling happens exactly once, before the loop; the topology
//! characterizations are re-encoded from the cached subgraphs every epoch.

pub mod checkpoint;
pub mod config;
pub mod loss;
pub mod optim;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::autodiff::{
    AutodiffError, NodeId, ParamStore, Result as AdResult, Tape,
};
use crate::experts::{init_expert_bank, ExpertBank, ExpertError};
use crate::gating::{init_gating, GatingNet};
use crate::graph::sample::{sample_multi_resolution, Subgraph};
use crate::graph::split::{split_edges, EdgeSplit};
use crate::graph::{Graph, GraphError, UNREACHABLE};
use crate::manifold::tape::TapeSpace;
use crate::manifold::ManifoldSpace;
use crate::mixture;
use crate::report::{
    auc, average_distortion, average_precision, f1_scores, micro_f1, DistortionOptions,
    EpochRow, EvalReport, MetricError, PairMode,
};

pub use checkpoint::{Checkpoint, CheckpointError, CHECKPOINT_VERSION};
pub use config::{ConfigError, TaskKind, TrainConfig};
pub use loss::{
    distortion_loss_t, init_classifier_head, link_prediction_loss_t,
    node_classification_loss_t, total_loss_t, ClassifierHead,
};
pub use optim::{adam_step, AdamState};

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Expert(#[from] ExpertError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("usage error: {0}")]
    Usage(String),
}

// Fixed offsets deriving the gating/head init streams from the run seed.
const GATING_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const HEAD_SEED_SALT: u64 = 0x517c_c1b7_2722_0a95;
const PAIR_SEED_SALT: u64 = 0x2545_f491_4f6c_dd1d;

/// Training always runs at least this many epochs (or `cfg.epochs` if
/// smaller) before patience-based early stopping can fire; the protocol
/// trains for at least 200 epochs with the early stop set to 100.
pub const EARLY_STOP_FLOOR: usize = 200;

/// The trainable stack: expert bank, gating network, optional NC head.
#[derive(Clone, Debug)]
pub struct Model {
    pub bank: ExpertBank,
    pub gating: GatingNet,
    pub head: Option<ClassifierHead>,
}

/// Registers every parameter in a deterministic order (experts, gating,
/// head), which doubles as the checkpoint layout.
pub fn build_model(
    store: &mut ParamStore,
    cfg: &TrainConfig,
    n_classes: Option<usize>,
) -> Result<Model, TrainingError> {
    let dims = cfg.dims();
    let bank = init_expert_bank(store, cfg.k, &cfg.init_curvatures, dims, cfg.seed)?;
    let gating = init_gating(store, cfg.k, cfg.d_t, &cfg.radii, cfg.seed ^ GATING_SEED_SALT);
    let head = n_classes.map(|c| {
        init_classifier_head(store, cfg.k * dims.d_out, dims.d_h, c, cfg.seed ^ HEAD_SEED_SALT)
    });
    Ok(Model { bank, gating, head })
}

/// Per-tape handles to everything the losses need.
pub struct TapeForward {
    pub spaces: Vec<TapeSpace>,
    /// `z[expert][node]`.
    pub z: Vec<Vec<NodeId>>,
    /// Gating rows per node.
    pub gates: Vec<NodeId>,
}

/// Expert forwards plus gating for the whole graph on one tape.
pub fn build_forward(
    tape: &mut Tape,
    store: &ParamStore,
    model: &Model,
    g: &Graph,
    features: &[Vec<f64>],
    subs: &[Vec<Subgraph>],
) -> AdResult<TapeForward> {
    let x_nodes: Vec<NodeId> = features.iter().map(|r| tape.vector(r)).collect();
    let mut spaces = Vec::with_capacity(model.bank.k());
    let mut z = Vec::with_capacity(model.bank.k());
    for expert in &model.bank.experts {
        let space = expert.tape_space(tape, store)?;
        let out = expert.forward_t(tape, store, &space, g, &x_nodes)?;
        spaces.push(space);
        z.push(out);
    }
    let mut gates = Vec::with_capacity(g.n_nodes());
    for v in 0..g.n_nodes() {
        let t = model.gating.encode_local_topology_t(tape, store, &subs[v])?;
        gates.push(model.gating.gate_t(tape, store, t)?);
    }
    Ok(TapeForward { spaces, z, gates })
}

/// Aligned-weight blended squared distance between nodes u and v on tape.
pub fn pair_distance_sq_t(
    tape: &mut Tape,
    fwd: &TapeForward,
    u: usize,
    v: usize,
    tau: f64,
) -> AdResult<NodeId> {
    let aligned = mixture::align_weights_t(tape, fwd.gates[u], fwd.gates[v], tau);
    let zu: Vec<NodeId> = fwd.z.iter().map(|ze| ze[u]).collect();
    let zv: Vec<NodeId> = fwd.z.iter().map(|ze| ze[v]).collect();
    mixture::pairwise_distance_sq_t(tape, &fwd.spaces, &zu, &zv, aligned)
}

/// Classifier logits for every node (NC task).
pub fn head_logits_t(
    tape: &mut Tape,
    store: &ParamStore,
    model: &Model,
    fwd: &TapeForward,
    g: &Graph,
) -> AdResult<Vec<NodeId>> {
    let head = model.head.as_ref().expect("head_logits_t needs a classifier head");
    let mut inputs = Vec::with_capacity(g.n_nodes());
    for v in 0..g.n_nodes() {
        let z_v: Vec<NodeId> = fwd.z.iter().map(|ze| ze[v]).collect();
        let segments = mixture::mix_embeddings_node_t(tape, &fwd.spaces, &z_v, fwd.gates[v])?;
        inputs.push(mixture::classifier_input_t(tape, &fwd.spaces, &segments)?);
    }
    Ok(head.forward_t(tape, store, g, &inputs))
}

/// Plain-value snapshot of a forward pass, for metric computation and export.
#[derive(Clone, Debug)]
pub struct ForwardValues {
    /// `z[expert][node]` coordinate vectors.
    pub z: Vec<Vec<Vec<f64>>>,
    /// Gating rows per node.
    pub gates: Vec<Vec<f64>>,
    pub nc_logits: Option<Vec<Vec<f64>>>,
}

pub fn forward_values(
    store: &ParamStore,
    model: &Model,
    g: &Graph,
    features: &[Vec<f64>],
    subs: &[Vec<Subgraph>],
) -> Result<ForwardValues, TrainingError> {
    let mut tape = Tape::new();
    let fwd = build_forward(&mut tape, store, model, g, features, subs)?;
    let nc_logits = match model.head {
        Some(_) => {
            let logits = head_logits_t(&mut tape, store, model, &fwd, g)?;
            Some(logits.iter().map(|&id| tape.data(id).to_vec()).collect())
        }
        None => None,
    };
    Ok(ForwardValues {
        z: fwd
            .z
            .iter()
            .map(|per_node| per_node.iter().map(|&id| tape.data(id).to_vec()).collect())
            .collect(),
        gates: fwd.gates.iter().map(|&id| tape.data(id).to_vec()).collect(),
        nc_logits,
    })
}

// ---- pair sampling for the distortion loss ---------------------------------

/// Distortion pairs. Below the budget every same-component pair is used
/// each epoch; above it, pairs are drawn per epoch as (landmark, random
/// reachable target) from a fixed landmark set with cached BFS rows.
pub struct PairSampler {
    full_pairs: Option<Vec<(u32, u32, u32)>>,
    landmarks: Vec<(u32, Vec<u32>, Vec<u32>)>,
    budget: usize,
}

impl PairSampler {
    pub fn new(g: &Graph, budget: usize, n_landmarks: usize, rng: &mut ChaCha20Rng) -> PairSampler {
        let n = g.n_nodes();
        if n.saturating_mul(n) <= budget {
            let mut pairs = Vec::new();
            for u in 0..n as u32 {
                let row = g.bfs_from(u);
                for v in (u + 1)..n as u32 {
                    let d = row[v as usize];
                    if d != UNREACHABLE {
                        pairs.push((u, v, d));
                    }
                }
            }
            return PairSampler { full_pairs: Some(pairs), landmarks: Vec::new(), budget };
        }
        let mut ids: Vec<u32> = (0..n as u32).collect();
        ids.shuffle(rng);
        ids.truncate(n_landmarks.min(n));
        let landmarks = ids
            .into_iter()
            .map(|u| {
                let row = g.bfs_from(u);
                let targets: Vec<u32> = (0..n as u32)
                    .filter(|&v| v != u && row[v as usize] != UNREACHABLE)
                    .collect();
                (u, row, targets)
            })
            .filter(|(_, _, t)| !t.is_empty())
            .collect();
        PairSampler { full_pairs: None, landmarks, budget }
    }

    pub fn is_full(&self) -> bool {
        self.full_pairs.is_some()
    }

    /// Pairs `(i, j, g(i,j))` for one epoch; every pair has `i != j` and a
    /// finite positive graph distance.
    pub fn epoch_pairs(&self, rng: &mut ChaCha20Rng) -> Vec<(u32, u32, u32)> {
        match &self.full_pairs {
            Some(pairs) => pairs.clone(),
            None => {
                let mut out = Vec::with_capacity(self.budget);
                if self.landmarks.is_empty() {
                    return out;
                }
                for _ in 0..self.budget {
                    let (u, row, targets) = &self.landmarks[rng.gen_range(0..self.landmarks.len())];
                    let v = targets[rng.gen_range(0..targets.len())];
                    out.push((*u, v, row[v as usize]));
                }
                out
            }
        }
    }
}

// ---- node split for classification ------------------------------------------

#[derive(Clone, Debug)]
pub struct NodeSplit {
    pub train: Vec<u32>,
    pub valid: Vec<u32>,
    pub test: Vec<u32>,
}

/// Splits the labeled nodes by the same ratios used for edges.
pub fn split_nodes(
    g: &Graph,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<NodeSplit, TrainingError> {
    let labels = g
        .labels()
        .ok_or_else(|| TrainingError::Usage("node classification requires labels".into()))?;
    let mut labeled: Vec<u32> = (0..g.n_nodes() as u32)
        .filter(|&u| labels[u as usize].is_some())
        .collect();
    if labeled.len() < 3 {
        return Err(TrainingError::Usage(format!(
            "need at least 3 labeled nodes, found {}",
            labeled.len()
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    labeled.shuffle(&mut rng);
    let n = labeled.len();
    let n_valid = ((ratios.1 * n as f64).round() as usize).max(1);
    let n_test = ((ratios.2 * n as f64).round() as usize).max(1);
    let n_train = n - n_valid - n_test;
    if n_train == 0 {
        return Err(TrainingError::Usage("node split leaves no training nodes".into()));
    }
    Ok(NodeSplit {
        train: labeled[..n_train].to_vec(),
        valid: labeled[n_train..n_train + n_valid].to_vec(),
        test: labeled[n_train + n_valid..].to_vec(),
    })
}

// ---- training ---------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub store: ParamStore,
    pub model: Model,
    pub resolved: TrainConfig,
    pub log: Vec<EpochRow>,
    pub best_epoch: usize,
    pub diverged: bool,
    pub report: EvalReport,
    pub per_node_distortion: Vec<f64>,
    pub values: ForwardValues,
}

pub fn log_csv(rows: &[EpochRow]) -> String {
    crate::report::curves_csv(rows)
}

struct TaskData {
    msg_graph: Graph,
    edge_split: Option<EdgeSplit>,
    node_split: Option<NodeSplit>,
    n_classes: Option<usize>,
}

/// Deterministic task setup shared by training and re-evaluation: splits,
/// the message-passing graph (train edges only for LP), and class count.
fn prepare_task(g: &Graph, cfg: &TrainConfig) -> Result<TaskData, TrainingError> {
    match cfg.task {
        TaskKind::LinkPrediction => {
            let split = split_edges(g, cfg.split_ratios, cfg.seed)?;
            let msg_graph = Graph::from_edges(g.n_nodes(), &split.train_pos)?;
            Ok(TaskData {
                msg_graph,
                edge_split: Some(split),
                node_split: None,
                n_classes: None,
            })
        }
        TaskKind::NodeClassification => {
            let split = split_nodes(g, cfg.split_ratios, cfg.seed)?;
            let labels = g.labels().expect("split_nodes checked labels");
            let n_classes = labels
                .iter()
                .flatten()
                .copied()
                .max()
                .map(|m| m as usize + 1)
                .ok_or_else(|| TrainingError::Usage("no labeled nodes".into()))?;
            Ok(TaskData {
                msg_graph: g.clone(),
                edge_split: None,
                node_split: Some(split),
                n_classes: Some(n_classes),
            })
        }
    }
}

fn lp_scores(
    values: &ForwardValues,
    spaces: &[ManifoldSpace],
    pairs: &[(u32, u32)],
    cfg: &TrainConfig,
) -> Result<Vec<f64>, TrainingError> {
    pairs
        .iter()
        .map(|&(u, v)| {
            let aligned = mixture::align_weights(
                &values.gates[u as usize],
                &values.gates[v as usize],
                cfg.tau,
            );
            let zu: Vec<&[f64]> = values.z.iter().map(|ze| ze[u as usize].as_slice()).collect();
            let zv: Vec<&[f64]> = values.z.iter().map(|ze| ze[v as usize].as_slice()).collect();
            let d_sq = mixture::pairwise_distance_sq(spaces, &zu, &zv, &aligned)
                .map_err(MetricError::Manifold)?;
            Ok(mixture::edge_probability(d_sq, cfg.fd_r, cfg.fd_t))
        })
        .collect()
}

fn lp_auc(
    values: &ForwardValues,
    spaces: &[ManifoldSpace],
    pos: &[(u32, u32)],
    neg: &[(u32, u32)],
    cfg: &TrainConfig,
) -> Result<f64, TrainingError> {
    let mut scores = lp_scores(values, spaces, pos, cfg)?;
    scores.extend(lp_scores(values, spaces, neg, cfg)?);
    let labels: Vec<bool> =
        std::iter::repeat(true).take(pos.len()).chain(std::iter::repeat(false).take(neg.len())).collect();
    Ok(auc(&scores, &labels)?)
}

fn nc_weighted_f1(values: &ForwardValues, g: &Graph, mask: &[u32]) -> f64 {
    let logits = values.nc_logits.as_ref().expect("NC values carry logits");
    let labels = g.labels().expect("NC graph carries labels");
    let pred: Vec<u32> = mask.iter().map(|&u| argmax(&logits[u as usize])).collect();
    let truth: Vec<u32> = mask.iter().map(|&u| labels[u as usize].unwrap()).collect();
    f1_scores(&pred, &truth).0
}

pub(crate) fn argmax(row: &[f64]) -> u32 {
    let mut best = 0usize;
    for i in 1..row.len() {
        if row[i] > row[best] {
            best = i;
        }
    }
    best as u32
}

/// Extracts plain values from a tape forward (and optional logits).
fn extract_values(tape: &Tape, fwd: &TapeForward, logits: Option<&[NodeId]>) -> ForwardValues {
    ForwardValues {
        z: fwd
            .z
            .iter()
            .map(|per_node| per_node.iter().map(|&id| tape.data(id).to_vec()).collect())
            .collect(),
        gates: fwd.gates.iter().map(|&id| tape.data(id).to_vec()).collect(),
        nc_logits: logits.map(|ids| ids.iter().map(|&id| tape.data(id).to_vec()).collect()),
    }
}

/// Full training run per the standard loop: subgraphs sampled once, per
/// epoch one tape (expert forwards, characterizations, gating, pair terms),
/// one Adam update, early stop on the validation metric, best snapshot
/// restored at the end. On divergence the last finite parameters are kept
/// and `diverged` is set; artifacts stay usable.
pub fn train(g: &Graph, cfg: &TrainConfig) -> Result<TrainOutcome, TrainingError> {
    let features = g
        .features()
        .ok_or_else(|| TrainingError::Usage("training requires node features".into()))?
        .clone();
    let feat_dim = features
        .first()
        .map(|r| r.len())
        .ok_or_else(|| TrainingError::Usage("empty feature matrix".into()))?;
    let resolved = cfg.resolve(g.n_nodes(), feat_dim);
    resolved.validate()?;
    if resolved.d_in != Some(feat_dim) {
        return Err(TrainingError::Usage(format!(
            "dims.d_in = {:?} does not match feature dimension {feat_dim}",
            resolved.d_in
        )));
    }

    let task = prepare_task(g, &resolved)?;
    let n = g.n_nodes();

    // Algorithm step: sample local topology subgraphs once, outside the loop.
    let subs: Vec<Vec<Subgraph>> = (0..n as u32)
        .map(|v| sample_multi_resolution(&task.msg_graph, v, &resolved.radii))
        .collect();

    let mut store = ParamStore::new();
    let model = build_model(&mut store, &resolved, task.n_classes)?;
    let mut adam = AdamState::new(&store);
    let clamps = model.bank.curvature_clamps();

    let mut pair_rng = ChaCha20Rng::seed_from_u64(resolved.seed ^ PAIR_SEED_SALT);
    let effective_budget = resolved.pair_budget.min(n * n);
    let sampler = if resolved.lambda > 0.0 {
        Some(PairSampler::new(&task.msg_graph, effective_budget, resolved.landmarks, &mut pair_rng))
    } else {
        None
    };

    let mut log_rows: Vec<EpochRow> = Vec::with_capacity(resolved.epochs);
    let mut best_metric = f64::NEG_INFINITY;
    // Strict improvements reset the patience clock; ties still refresh the
    // snapshot so the longest-trained of equally good models is kept.
    let mut last_improvement = 0usize;
    let mut best_epoch = 0usize;
    let mut best_store: Option<ParamStore> = None;
    let mut diverged = false;

    for epoch in 1..=resolved.epochs {
        let mut tape = Tape::new();
        let fwd = build_forward(&mut tape, &store, &model, &task.msg_graph, &features, &subs)?;

        let (task_loss_node, values) = match resolved.task {
            TaskKind::LinkPrediction => {
                let split = task.edge_split.as_ref().unwrap();
                let mut pos_d2 = Vec::with_capacity(split.train_pos.len());
                for &(u, v) in &split.train_pos {
                    pos_d2.push(pair_distance_sq_t(&mut tape, &fwd, u as usize, v as usize, resolved.tau)?);
                }
                let mut neg_d2 = Vec::with_capacity(split.train_neg.len());
                for &(u, v) in &split.train_neg {
                    neg_d2.push(pair_distance_sq_t(&mut tape, &fwd, u as usize, v as usize, resolved.tau)?);
                }
                let loss =
                    link_prediction_loss_t(&mut tape, &pos_d2, &neg_d2, resolved.fd_r, resolved.fd_t)?;
                let values = extract_values(&tape, &fwd, None);
                (loss, values)
            }
            TaskKind::NodeClassification => {
                let logits = head_logits_t(&mut tape, &store, &model, &fwd, &task.msg_graph)?;
                let split = task.node_split.as_ref().unwrap();
                let loss = node_classification_loss_t(
                    &mut tape,
                    &logits,
                    g.labels().unwrap(),
                    &split.train,
                )?;
                let values = extract_values(&tape, &fwd, Some(&logits));
                (loss, values)
            }
        };

        let distortion_node = match &sampler {
            Some(s) => {
                let pairs = s.epoch_pairs(&mut pair_rng);
                let mut terms = Vec::with_capacity(pairs.len());
                for (u, v, g_dist) in pairs {
                    let d2 = pair_distance_sq_t(&mut tape, &fwd, u as usize, v as usize, resolved.tau)?;
                    terms.push((d2, g_dist));
                }
                Some(distortion_loss_t(&mut tape, &terms)?)
            }
            None => None,
        };

        let total = total_loss_t(&mut tape, task_loss_node, distortion_node, resolved.lambda);
        let task_loss = tape.scalar_value(task_loss_node);
        let distortion_loss = distortion_node.map(|d| tape.scalar_value(d)).unwrap_or(0.0);

        if !tape.scalar_value(total).is_finite() {
            log::warn!("loss diverged at epoch {epoch}; keeping last finite parameters");
            diverged = true;
            break;
        }

        let spaces = model.bank.spaces(&store);
        let val_metric = match resolved.task {
            TaskKind::LinkPrediction => {
                let split = task.edge_split.as_ref().unwrap();
                lp_auc(&values, &spaces, &split.valid_pos, &split.valid_neg, &resolved)?
            }
            TaskKind::NodeClassification => {
                nc_weighted_f1(&values, g, &task.node_split.as_ref().unwrap().valid)
            }
        };

        log_rows.push(EpochRow { epoch, task_loss, distortion_loss, val_metric });

        if val_metric >= best_metric {
            if val_metric > best_metric {
                last_improvement = epoch;
            }
            best_metric = val_metric;
            best_epoch = epoch;
            best_store = Some(store.clone());
        }

        let grads = tape.backward(total)?;
        adam_step(&mut store, &mut adam, &grads, resolved.lr, resolved.weight_decay, &clamps);

        if epoch >= EARLY_STOP_FLOOR.min(resolved.epochs)
            && epoch - last_improvement >= resolved.patience
        {
            log::info!("early stop at epoch {epoch} (best epoch {best_epoch})");
            break;
        }
    }

    // Early stopping restores the best-validation snapshot, not the last.
    if let Some(best) = best_store {
        store = best;
    }

    let (report, per_node_distortion, values) = evaluate(g, &resolved, &store, &model)?;
    Ok(TrainOutcome {
        store,
        model,
        resolved,
        log: log_rows,
        best_epoch,
        diverged,
        report,
        per_node_distortion,
        values,
    })
}

/// Recomputes test metrics and average distortion from parameters. The
/// splits are rebuilt from the config seed, so evaluation right after
/// training reproduces the training report exactly.
pub fn evaluate(
    g: &Graph,
    cfg: &TrainConfig,
    store: &ParamStore,
    model: &Model,
) -> Result<(EvalReport, Vec<f64>, ForwardValues), TrainingError> {
    let features = g
        .features()
        .ok_or_else(|| TrainingError::Usage("evaluation requires node features".into()))?;
    let task = prepare_task(g, cfg)?;
    let subs: Vec<Vec<Subgraph>> = (0..g.n_nodes() as u32)
        .map(|v| sample_multi_resolution(&task.msg_graph, v, &cfg.radii))
        .collect();
    let values = forward_values(store, model, &task.msg_graph, features, &subs)?;
    let spaces = model.bank.spaces(store);

    let mut report = EvalReport {
        task: cfg.task.as_str().to_string(),
        auc: None,
        ap: None,
        weighted_f1: None,
        macro_f1: None,
        micro_f1: None,
        avg_distortion: 0.0,
        n_nodes: g.n_nodes(),
        n_edges: g.n_edges(),
        seed: cfg.seed,
        config: cfg.echo_string(),
    };

    match cfg.task {
        TaskKind::LinkPrediction => {
            let split = task.edge_split.as_ref().unwrap();
            let mut scores = lp_scores(&values, &spaces, &split.test_pos, cfg)?;
            scores.extend(lp_scores(&values, &spaces, &split.test_neg, cfg)?);
            let labels: Vec<bool> = std::iter::repeat(true)
                .take(split.test_pos.len())
                .chain(std::iter::repeat(false).take(split.test_neg.len()))
                .collect();
            report.auc = Some(auc(&scores, &labels)?);
            report.ap = Some(average_precision(&scores, &labels)?);
        }
        TaskKind::NodeClassification => {
            let split = task.node_split.as_ref().unwrap();
            let logits = values.nc_logits.as_ref().unwrap();
            let labels = g.labels().unwrap();
            let pred: Vec<u32> =
                split.test.iter().map(|&u| argmax(&logits[u as usize])).collect();
            let truth: Vec<u32> =
                split.test.iter().map(|&u| labels[u as usize].unwrap()).collect();
            let (w, m) = f1_scores(&pred, &truth);
            report.weighted_f1 = Some(w);
            report.macro_f1 = Some(m);
            report.micro_f1 = Some(micro_f1(&pred, &truth));
        }
    }

    let opts = DistortionOptions {
        mode: PairMode::Auto,
        budget: cfg.pair_budget,
        seed: cfg.seed,
        tau: cfg.tau,
    };
    let distortion = average_distortion(&spaces, &values.z, &values.gates, g, &opts)?;
    report.avg_distortion = distortion.mean;

    Ok((report, distortion.per_node, values))
}
