//! Finite-difference sweeps over every differentiable operation in the
//! stack, from single manifold maps up to the full composite losses. Each
//! target builds a fresh randomized instance, evaluates a scalar objective
//! through the tape, and compares every trainable coordinate's adjoint
//! against central differences.
//!
//! Instances are sampled inside each operation's domain with a margin so
//! the ±h probes never cross a kink or leave the domain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::autodiff::{
    finite_difference_check, AutodiffError, NodeId, ParamId, ParamKind, ParamStore,
    Result as AdResult, Tape, Value,
};
use crate::experts::{init_expert_bank, ExpertDims};
use crate::gating::init_gating;
use crate::graph::sample::sample_multi_resolution;
use crate::graph::synth::{generate_heterogeneous, structural_node_features, Substructure, SyntheticSpec};
use crate::graph::Graph;
use crate::manifold::tape::TapeSpace;
use crate::mixture;
use crate::training::{
    build_forward, build_model, distortion_loss_t, link_prediction_loss_t, head_logits_t,
    node_classification_loss_t, pair_distance_sq_t, total_loss_t, TaskKind, TrainConfig,
    TrainingError,
};

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;
const MARGIN: f64 = 0.05;
const KAPPAS: [f64; 6] = [-3.0, -1.0, -0.5, 0.5, 1.0, 3.0];

/// One differentiable operation whose gradients the sweep certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradTarget {
    MobiusAdd,
    Exp0,
    Log0,
    Dist,
    KappaScale,
    ProjectFeatures,
    ExpertForward,
    EncodeTopology,
    Gate,
    AlignWeights,
    PairwiseDistanceSq,
    EdgeProbability,
    MixEmbeddings,
    DistortionLoss,
    LinkPredictionLoss,
    NodeClassificationLoss,
}

impl GradTarget {
    pub fn name(&self) -> &'static str {
        match self {
            GradTarget::MobiusAdd => "manifold/mobius_add",
            GradTarget::Exp0 => "manifold/exp0",
            GradTarget::Log0 => "manifold/log0",
            GradTarget::Dist => "manifold/dist",
            GradTarget::KappaScale => "manifold/kappa_scale",
            GradTarget::ProjectFeatures => "experts/project_features",
            GradTarget::ExpertForward => "experts/expert_forward",
            GradTarget::EncodeTopology => "gating/encode_local_topology",
            GradTarget::Gate => "gating/gate",
            GradTarget::AlignWeights => "mixture/align_weights",
            GradTarget::PairwiseDistanceSq => "mixture/pairwise_distance_sq",
            GradTarget::EdgeProbability => "mixture/edge_probability",
            GradTarget::MixEmbeddings => "mixture/mix_embeddings",
            GradTarget::DistortionLoss => "training/distortion_loss",
            GradTarget::LinkPredictionLoss => "training/link_prediction_loss",
            GradTarget::NodeClassificationLoss => "training/node_classification_loss",
        }
    }
}

pub const ALL_TARGETS: [GradTarget; 16] = [
    GradTarget::MobiusAdd,
    GradTarget::Exp0,
    GradTarget::Log0,
    GradTarget::Dist,
    GradTarget::KappaScale,
    GradTarget::ProjectFeatures,
    GradTarget::ExpertForward,
    GradTarget::EncodeTopology,
    GradTarget::Gate,
    GradTarget::AlignWeights,
    GradTarget::PairwiseDistanceSq,
    GradTarget::EdgeProbability,
    GradTarget::MixEmbeddings,
    GradTarget::DistortionLoss,
    GradTarget::LinkPredictionLoss,
    GradTarget::NodeClassificationLoss,
];

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub target: GradTarget,
    pub instances: usize,
    pub coords_checked: usize,
    pub max_rel_err: f64,
}

/// Runs `instances` randomized finite-difference checks (step 1e-5) for one
/// target and returns the worst relative error seen.
pub fn sweep(target: GradTarget, instances: usize, base_seed: u64) -> Result<SweepReport, TrainingError> {
    let mut report = SweepReport {
        target,
        instances,
        coords_checked: 0,
        max_rel_err: 0.0,
    };
    for i in 0..instances {
        let seed = base_seed.wrapping_add(i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let fd = run_instance(target, seed, i)?;
        report.coords_checked += fd.coords_checked;
        if fd.max_rel_err > report.max_rel_err {
            report.max_rel_err = fd.max_rel_err;
        }
    }
    Ok(report)
}

fn usage(e: TrainingError) -> AutodiffError {
    AutodiffError::Usage(format!("{e}"))
}

fn run_instance(
    target: GradTarget,
    seed: u64,
    index: usize,
) -> Result<crate::autodiff::FdReport, TrainingError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let kappa = KAPPAS[index % KAPPAS.len()];
    match target {
        GradTarget::MobiusAdd => {
            let mut store = ParamStore::new();
            let k = register_kappa(&mut store, kappa);
            let x = register_point(&mut store, "x", &mut rng, kappa, 4);
            let y = register_point(&mut store, "y", &mut rng, kappa, 4);
            let probe = rand_probe(&mut rng, 4);
            Ok(finite_difference_check(
                &mut store,
                |store, tape| {
                    let space = bind_space(store, tape, k, kappa)?;
                    let xn = tape.param(store, x);
                    let yn = tape.param(store, y);
                    let out = space.mobius_add(tape, xn, yn)?;
                    scalarize(tape, out, &probe)
                },
                FD_STEP,
            )?)
        }
        GradTarget::Exp0 => {
            let mut store = ParamStore::new();
            let k = register_kappa(&mut store, kappa);
            let v = register_tangent(&mut store, "v", &mut rng, kappa, 4);
            let probe = rand_probe(&mut rng, 4);
            Ok(finite_difference_check(
                &mut store,
                |store, tape| {
                    let space = bind_space(store, tape, k, kappa)?;
                    let vn = tape.param(store, v);
                    let out = space.exp0(tape, vn)?;
                    scalarize(tape, out, &probe)
                },
                FD_STEP,
            )?)
        }
        GradTarget::Log0 => {
            let mut store = ParamStore::new();
            let k = register_kappa(&mut store, kappa);
            let y = register_point(&mut store, "y", &mut rng, kappa, 4);
            let probe = rand_probe(&mut rng, 4);
            Ok(finite_difference_check(
                &mut store,
                |store, tape| {
                    let space = bind_space(store, tape, k, kappa)?;
                    let yn = tape.param(store, y);
                    let out = space.log0(tape, yn)?;
                    scalarize(tape, out, &probe)
                },
                FD_STEP,
            )?)
        }
        GradTarget::Dist => {
            let mut store = ParamStore::new();
            let k = register_kappa(&mut store, kappa);
            let x = register_point(&mut store, "x", &mut rng, kappa, 4);
            // Keep y separated from x so the norm kink at coincidence is
            // outside the probe radius.
            let y = loop {
                let mut probe_store = ParamStore::new();
                let cand = register_point(&mut probe_store, "y", &mut rng, kappa, 4);
                let dist: f64 = probe_store
                    .value(cand)
                    .data
                    .iter()
                    .zip(&store.value(x).data)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if dist > 2.0 * MARGIN {
                    break store.register(
                        "y",
                        probe_store.value(cand).clone(),
                        ParamKind::Weight,
                        true,
                    );
                }
            };
            Ok(finite_difference_check(
                &mut store,
                |store, tape| {
                    let space = bind_space(store, tape, k, kappa)?;
                    let xn = tape.param(store, x);
                    let yn = tape.param(store, y);
                    space.dist(tape, xn, yn)
                },
                FD_STEP,
            )?)
        }
        GradTarget::KappaScale => {
            let mut store = ParamStore::new();
            let k = register_kappa(&mut store, kappa);
            let x = register_point(&mut store, "x", &mut rng, kappa, 4);
            let w =
                store.register("w", Value::scalar(rng.gen_range(0.1..0.9)), ParamKind::Weight, true);
            let probe = rand_probe(&mut rng, 4);
            Ok(finite_difference_check(
                &mut store,
                |store, tape| {
                    let space = bind_space(store, tape, k, kappa)?;
                    let xn = tape.param(store, x);
                    let wn = tape.param(store, w);
                    let out = space.kappa_scale(tape, wn, xn)?;
                    scalarize(tape, out, &probe)
                },
                FD_STEP,
            )?)
        }
        GradTarget::ProjectFeatures => {
            let dims = ExpertDims { d_in: 3, d_h: 4, d_out: 4 };
            let mut store = ParamStore::new();
            let bank = init_expert_bank(&mut store, 1, &[kappa], dims, seed)?;
            let rows: Vec<Vec<f64>> =
                (0..3).map(|_| (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect()).collect();
            let probe = rand_probe(&mut rng, 4);
            let expert = bank.experts[0].clone();
            Ok(finite_difference_check(
                &mut store,
                |store, tape| {
                    let space = expert.tape_space(tape, store)?;
                    let xs: Vec<NodeId> = rows.iter().map(|r| tape.vector(r)).collect();
                    let h = expert.project_features_t(tape, store, &space, &xs)?;
                    let scalars: Vec<NodeId> = h
                        .iter()
                        .map(|&id| {
                            let p = tape.vector(&probe);
                            tape.dot(id, p)
                        })
                        .collect();
                    Ok(tape.mean_many(&scalars))
                },
                FD_STEP,
            )?)
        }
        GradTarget::ExpertForward => {
            let dims = ExpertDims { d_in: 3, d_h: 4, d_out: 4 };
            let mut store = ParamStore::new();
            let bank = init_expert_bank(&mut store, 1, &[kappa], dims, seed)?;
            let g = tiny_graph(seed);
            let rows: Vec<Vec<f64>> = (0..g.n_nodes())
                .map(|_| (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect())
                .collect();
            let probe = rand_probe(&mut rng, 4);
            let expert = bank.experts[0].clone();
            Ok(finite_difference_check(
                &mut store,
                |store, tape| {
                    let space = expert.tape_space(tape, store)?;
                    let xs: Vec<NodeId> = rows.iter().map(|r| tape.vector(r)).collect();
                    let out = expert.forward_t(tape, store, &space, &g, &xs)?;
                    let scalars: Vec<NodeId> = out
                        .iter()
                        .map(|&id| {
                            let p = tape.vector(&probe);
                            tape.dot(id, p)
                        })
                        .collect();
                    Ok(tape.mean_many(&scalars))
                },
                FD_STEP,
            )?)
        }
        GradTarget::EncodeTopology | GradTarget::Gate => {
            let mut store = ParamStore::new();
            let net = init_gating(&mut store, 3, 4, &[1, 2], seed);
            let g = tiny_graph(seed);
            let subs: Vec<_> = (0..g.n_nodes() as u32)
                .map(|v| sample_multi_resolution(&g, v, &[1, 2]))
                .collect();
            let probe_t = rand_probe(&mut rng, net.characterization_len());
            let probe_k = rand_probe(&mut rng, 3);
            let want_gate = target == GradTarget::Gate;
            Ok(finite_difference_check(
                &mut store,
                |store, tape| {
                    let scalars: Vec<NodeId> = subs
                        .iter()
                        .map(|s| {
                            let t = net.encode_local_topology_t(tape, store, s)?;
                            if want_gate {
                                let w = net.gate_t(tape, store, t)?;
                                let p = tape.vector(&probe_k);
                                Ok(tape.dot(w, p))
                            } else {
                                let p = tape.vector(&probe_t);
                                Ok(tape.dot(t, p))
                            }
                        })
                        .collect::<AdResult<_>>()?;
                    Ok(tape.mean_many(&scalars))
                },
                FD_STEP,
            )?)
        }
        GradTarget::AlignWeights => {
            let mut store = ParamStore::new();
            let w_u = register_box(&mut store, "w_u", &mut rng, 4, 0.1, 0.9);
            let w_v = register_box(&mut store, "w_v", &mut rng, 4, 0.1, 0.9);
            let probe = rand_probe(&mut rng, 4);
            let tau = [0.5, 1.0, 2.0][index % 3];
            Ok(finite_difference_check(
                &mut store,
                |store, tape| {
                    let u = tape.param(store, w_u);
                    let v = tape.param(store, w_v);
                    let aligned = mixture::align_weights_t(tape, u, v, tau);
                    scalarize(tape, aligned, &probe)
                },
                FD_STEP,
            )?)
        }
        GradTarget::PairwiseDistanceSq => {
            // Two experts with opposite-sign curvature plus weights.
            let mut store = ParamStore::new();
            let k_neg = register_kappa_named(&mut store, "kappa_neg", -1.0 - rng.gen_range(0.0..1.0));
            let k_pos = register_kappa_named(&mut store, "kappa_pos", 0.5 + rng.gen_range(0.0..1.0));
            let kn = store.value(k_neg).as_scalar();
            let kp = store.value(k_pos).as_scalar();
            let zu1 = register_point_for(&mut store, "zu1", &mut rng, kn, 3, 0.0);
            let zu2 = register_point_for(&mut store, "zu2", &mut rng, kp, 3, 0.0);
            let zv1 = register_point_for(&mut store, "zv1", &mut rng, kn, 3, 0.5);
            let zv2 = register_point_for(&mut store, "zv2", &mut rng, kp, 3, 0.5);
            let w_u = register_box(&mut store, "w_u", &mut rng, 2, 0.1, 0.9);
            let w_v = register_box(&mut store, "w_v", &mut rng, 2, 0.1, 0.9);
            Ok(finite_difference_check(
                &mut store,
                |store, tape| {
                    let s1 = bind_space(store, tape, k_neg, -1.0)?;
                    let s2 = bind_space(store, tape, k_pos, 1.0)?;
                    let u = tape.param(store, w_u);
                    let v = tape.param(store, w_v);
                    let aligned = mixture::align_weights_t(tape, u, v, 1.0);
                    let zu = [tape.param(store, zu1), tape.param(store, zu2)];
                    let zv = [tape.param(store, zv1), tape.param(store, zv2)];
                    mixture::pairwise_distance_sq_t(tape, &[s1, s2], &zu, &zv, aligned)
                },
                FD_STEP,
            )?)
        }
        GradTarget::EdgeProbability => {
            let mut store = ParamStore::new();
            let d2 = store.register(
                "d_sq",
                Value::scalar(rng.gen_range(0.1..5.0)),
                ParamKind::Weight,
                true,
            );
            let r = rng.gen_range(0.5..3.0);
            let t = rng.gen_range(0.5..2.0);
            Ok(finite_difference_check(
                &mut store,
                |store, tape| {
                    let d = tape.param(store, d2);
                    mixture::edge_probability_t(tape, d, r, t)
                },
                FD_STEP,
            )?)
        }
        GradTarget::MixEmbeddings => {
            let mut store = ParamStore::new();
            let k = register_kappa(&mut store, kappa);
            let z1 = register_point(&mut store, "z1", &mut rng, kappa, 3);
            let z2 = register_box(&mut store, "z2", &mut rng, 3, -0.5, 0.5);
            let w = register_box(&mut store, "w", &mut rng, 2, 0.1, 0.9);
            let probe = rand_probe(&mut rng, 3);
            Ok(finite_difference_check(
                &mut store,
                |store, tape| {
                    let s1 = bind_space(store, tape, k, kappa)?;
                    let s2 = TapeSpace::euclidean();
                    let zs = [tape.param(store, z1), tape.param(store, z2)];
                    let wn = tape.param(store, w);
                    let segments = mixture::mix_embeddings_node_t(tape, &[s1, s2], &zs, wn)?;
                    let scalars: Vec<NodeId> = segments
                        .iter()
                        .map(|&seg| {
                            let p = tape.vector(&probe);
                            tape.dot(seg, p)
                        })
                        .collect();
                    Ok(tape.mean_many(&scalars))
                },
                FD_STEP,
            )?)
        }
        GradTarget::DistortionLoss | GradTarget::LinkPredictionLoss => {
            let (g, cfg) = loss_fixture(seed, TaskKind::LinkPrediction);
            let mut store = ParamStore::new();
            let model = build_model(&mut store, &cfg, None)?;
            let subs: Vec<_> = (0..g.n_nodes() as u32)
                .map(|v| sample_multi_resolution(&g, v, &cfg.radii))
                .collect();
            let features = g.features().unwrap().clone();
            // Fixed pair sets for the whole instance.
            let mut pairs = Vec::new();
            for u in 0..g.n_nodes() as u32 {
                let row = g.bfs_from(u);
                for v in (u + 1)..g.n_nodes() as u32 {
                    if row[v as usize] != crate::graph::UNREACHABLE {
                        pairs.push((u, v, row[v as usize]));
                    }
                }
            }
            let pos: Vec<(u32, u32)> = g.edges().into_iter().take(4).collect();
            let neg: Vec<(u32, u32)> = pairs
                .iter()
                .filter(|&&(u, v, _)| !g.has_edge(u, v))
                .map(|&(u, v, _)| (u, v))
                .take(4)
                .collect();
            let want_distortion = target == GradTarget::DistortionLoss;
            Ok(finite_difference_check(
                &mut store,
                |store, tape| {
                    let fwd = build_forward(tape, store, &model, &g, &features, &subs)?;
                    if want_distortion {
                        let mut terms = Vec::new();
                        for &(u, v, gd) in &pairs {
                            let d2 =
                                pair_distance_sq_t(tape, &fwd, u as usize, v as usize, cfg.tau)?;
                            terms.push((d2, gd));
                        }
                        distortion_loss_t(tape, &terms).map_err(usage)
                    } else {
                        let mut pos_d2 = Vec::new();
                        for &(u, v) in &pos {
                            pos_d2.push(pair_distance_sq_t(tape, &fwd, u as usize, v as usize, cfg.tau)?);
                        }
                        let mut neg_d2 = Vec::new();
                        for &(u, v) in &neg {
                            neg_d2.push(pair_distance_sq_t(tape, &fwd, u as usize, v as usize, cfg.tau)?);
                        }
                        let task = link_prediction_loss_t(tape, &pos_d2, &neg_d2, cfg.fd_r, cfg.fd_t)?;
                        // Exercise the affine combination as well.
                        let mut terms = Vec::new();
                        for &(u, v, gd) in pairs.iter().take(5) {
                            let d2 =
                                pair_distance_sq_t(tape, &fwd, u as usize, v as usize, cfg.tau)?;
                            terms.push((d2, gd));
                        }
                        let dist = distortion_loss_t(tape, &terms).map_err(usage)?;
                        Ok(total_loss_t(tape, task, Some(dist), cfg.lambda))
                    }
                },
                FD_STEP,
            )?)
        }
        GradTarget::NodeClassificationLoss => {
            let (g, cfg) = loss_fixture(seed, TaskKind::NodeClassification);
            let mut store = ParamStore::new();
            let model = build_model(&mut store, &cfg, Some(2))?;
            let subs: Vec<_> = (0..g.n_nodes() as u32)
                .map(|v| sample_multi_resolution(&g, v, &cfg.radii))
                .collect();
            let features = g.features().unwrap().clone();
            let labels = g.labels().unwrap().clone();
            let mask: Vec<u32> = (0..g.n_nodes() as u32).collect();
            Ok(finite_difference_check(
                &mut store,
                |store, tape| {
                    let fwd = build_forward(tape, store, &model, &g, &features, &subs)?;
                    let logits = head_logits_t(tape, store, &model, &fwd, &g)?;
                    node_classification_loss_t(tape, &logits, &labels, &mask).map_err(usage)
                },
                FD_STEP,
            )?)
        }
    }
}

fn register_kappa(store: &mut ParamStore, kappa: f64) -> ParamId {
    register_kappa_named(store, "kappa", kappa)
}

fn register_kappa_named(store: &mut ParamStore, name: &str, kappa: f64) -> ParamId {
    store.register(name, Value::scalar(kappa), ParamKind::Curvature, true)
}

fn bind_space(
    store: &ParamStore,
    tape: &mut Tape,
    kappa: ParamId,
    sign_hint: f64,
) -> AdResult<TapeSpace> {
    let node = tape.param(store, kappa);
    TapeSpace::curved(tape, node, sign_hint > 0.0)
}

/// In-domain point with norm in [MARGIN, 0.7 × radius], offset optional.
fn register_point(store: &mut ParamStore, name: &str, rng: &mut ChaCha20Rng, kappa: f64, d: usize) -> ParamId {
    register_point_for(store, name, rng, kappa, d, 0.0)
}

fn register_point_for(
    store: &mut ParamStore,
    name: &str,
    rng: &mut ChaCha20Rng,
    kappa: f64,
    d: usize,
    shift: f64,
) -> ParamId {
    let radius = if kappa < 0.0 { 1.0 / (-kappa).sqrt() } else { 1.0 };
    let target = rng.gen_range(2.0 * MARGIN..0.7 * radius) + shift * 0.1;
    let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n: f64 = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let coords: Vec<f64> = dir.iter().map(|x| x * target / n.max(1e-9)).collect();
    store.register(name, Value::vector(coords), ParamKind::Weight, true)
}

/// Tangent vector sized inside the exp0 clamp for positive curvature.
fn register_tangent(store: &mut ParamStore, name: &str, rng: &mut ChaCha20Rng, kappa: f64, d: usize) -> ParamId {
    let bound = if kappa > 0.0 {
        0.8 * 0.99 * std::f64::consts::FRAC_PI_2 / kappa.sqrt()
    } else {
        1.5
    };
    let target = rng.gen_range(2.0 * MARGIN..bound);
    let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n: f64 = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let coords: Vec<f64> = dir.iter().map(|x| x * target / n.max(1e-9)).collect();
    store.register(name, Value::vector(coords), ParamKind::Weight, true)
}

fn register_box(
    store: &mut ParamStore,
    name: &str,
    rng: &mut ChaCha20Rng,
    d: usize,
    lo: f64,
    hi: f64,
) -> ParamId {
    let coords: Vec<f64> = (0..d).map(|_| rng.gen_range(lo..hi)).collect();
    store.register(name, Value::vector(coords), ParamKind::Weight, true)
}

fn rand_probe(rng: &mut ChaCha20Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn scalarize(tape: &mut Tape, out: NodeId, probe: &[f64]) -> AdResult<NodeId> {
    let p = tape.vector(probe);
    Ok(tape.dot(out, p))
}

/// 6-node heterogeneous fixture: a 3-node tree, a 3-cycle, one bridge.
fn tiny_graph(seed: u64) -> Graph {
    let spec = SyntheticSpec {
        parts: vec![
            Substructure::Tree { branching: 2, depth: 1 },
            Substructure::Cycle { len: 3 },
        ],
        inter_edges: 1,
        seed,
    };
    generate_heterogeneous(&spec).expect("fixture spec is valid")
}

fn loss_fixture(seed: u64, task: TaskKind) -> (Graph, TrainConfig) {
    let mut g = tiny_graph(seed);
    let feats = structural_node_features(&g, 3, seed);
    g.set_features(feats).unwrap();
    if task == TaskKind::NodeClassification {
        let labels: Vec<Option<u32>> =
            (0..g.n_nodes() as u32).map(|u| Some(if u < 3 { 0 } else { 1 })).collect();
        g.set_labels(labels).unwrap();
    }
    let cfg = TrainConfig {
        task,
        k: 2,
        init_curvatures: vec![-1.0, 1.0],
        d_in: Some(3),
        d_h: Some(3),
        d_out: Some(3),
        d_t: 3,
        radii: vec![1],
        seed,
        lambda: 0.1,
        ..TrainConfig::default()
    };
    (g, cfg)
}
