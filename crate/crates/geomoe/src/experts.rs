//! The bank of K constant-curvature GNN experts. Each expert is a 2-layer
//! message-passing network living in its own κ-stereographic space:
//! neighborhoods are aggregated in the origin tangent space (log map), the
//! combined message is transformed and mapped back (exp map).
//!
//! All trainable parameters, including the curvature, are plain Euclidean
//! arrays, so one standard optimizer covers the whole model. Each expert's
//! curvature is clamped to ±0.5 around its initialization, sign-preserving,
//! and the Euclidean expert's curvature is frozen at zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::autodiff::{NodeId, ParamId, ParamKind, ParamStore, Result as AdResult, Tape, Value};
use crate::graph::Graph;
use crate::manifold::tape::TapeSpace;
use crate::manifold::ManifoldSpace;

#[derive(Debug, Error)]
pub enum ExpertError {
    #[error("usage error: {0}")]
    Usage(String),
}

/// How far a trainable curvature may drift from its initialization.
pub const CURVATURE_HALF_RANGE: f64 = 0.5;
/// Smallest |κ| a curved expert may reach; keeps the sign stable.
const CURVATURE_MIN_ABS: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExpertDims {
    pub d_in: usize,
    pub d_h: usize,
    pub d_out: usize,
}

/// One expert: input projection into its manifold plus two message-passing
/// layers. The curvature parameter is registered even when frozen so every
/// expert has the same checkpoint footprint.
#[derive(Clone, Debug)]
pub struct RiemannianExpert {
    pub index: usize,
    pub kappa0: f64,
    pub kappa: ParamId,
    pub w_in: ParamId,
    pub b_in: ParamId,
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

impl RiemannianExpert {
    /// Clamp interval for the curvature: ±0.5 around κ₀, never crossing zero.
    pub fn kappa_bounds(&self) -> (f64, f64) {
        let mut lo = self.kappa0 - CURVATURE_HALF_RANGE;
        let mut hi = self.kappa0 + CURVATURE_HALF_RANGE;
        if self.kappa0 > 0.0 {
            lo = lo.max(CURVATURE_MIN_ABS);
        } else if self.kappa0 < 0.0 {
            hi = hi.min(-CURVATURE_MIN_ABS);
        } else {
            lo = 0.0;
            hi = 0.0;
        }
        (lo, hi)
    }

    pub fn space(&self, store: &ParamStore) -> ManifoldSpace {
        ManifoldSpace::new(store.value(self.kappa).as_scalar())
    }

    /// Binds this expert's space to a tape (curvature leaf included).
    pub fn tape_space(&self, tape: &mut Tape, store: &ParamStore) -> AdResult<TapeSpace> {
        let kv = store.value(self.kappa).as_scalar();
        if kv == 0.0 {
            Ok(TapeSpace::euclidean())
        } else {
            let k_node = tape.param(store, self.kappa);
            TapeSpace::curved(tape, k_node, kv > 0.0)
        }
    }

    /// Lifts Euclidean feature rows onto the manifold:
    /// `h⁰_u = exp₀(X_u·W_in + b_in)`.
    pub fn project_features_t(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        space: &TapeSpace,
        x_nodes: &[NodeId],
    ) -> AdResult<Vec<NodeId>> {
        let w = tape.param(store, self.w_in);
        let b = tape.param(store, self.b_in);
        x_nodes
            .iter()
            .map(|&x| {
                let affine = tape.matvec(w, x);
                let shifted = tape.add(affine, b);
                space.exp0(tape, shifted)
            })
            .collect()
    }

    /// Full 2-layer forward on `g`. Layer rule:
    /// `h_u ← exp₀(σ(W·mean_{v ∈ N(u) ∪ {u}} log₀(h_v) + b))`,
    /// σ = rectifier on layer 1, identity on layer 2. Isolated nodes
    /// aggregate only themselves. `space` must come from this expert's
    /// [`RiemannianExpert::tape_space`] on the same tape.
    pub fn forward_t(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        space: &TapeSpace,
        g: &Graph,
        x_nodes: &[NodeId],
    ) -> AdResult<Vec<NodeId>> {
        assert_eq!(x_nodes.len(), g.n_nodes(), "feature rows must match node count");
        let mut h = self.project_features_t(tape, store, space, x_nodes)?;
        for (layer, (w_id, b_id)) in [(self.w1, self.b1), (self.w2, self.b2)].iter().enumerate() {
            let w = tape.param(store, *w_id);
            let b = tape.param(store, *b_id);
            let tangents: Vec<NodeId> = h
                .iter()
                .map(|&hv| space.log0(tape, hv))
                .collect::<AdResult<_>>()?;
            let mut next = Vec::with_capacity(h.len());
            for u in 0..g.n_nodes() as u32 {
                let mut members = vec![tangents[u as usize]];
                members.extend(g.neighbors(u).iter().map(|&v| tangents[v as usize]));
                let agg = tape.mean_many(&members);
                let lin = tape.matvec(w, agg);
                let pre = tape.add(lin, b);
                let act = if layer == 0 { tape.relu(pre) } else { pre };
                next.push(space.exp0(tape, act)?);
            }
            h = next;
        }
        Ok(h)
    }
}

/// K experts sharing dimensions, ordered as initialized.
#[derive(Clone, Debug)]
pub struct ExpertBank {
    pub experts: Vec<RiemannianExpert>,
    pub dims: ExpertDims,
}

impl ExpertBank {
    pub fn k(&self) -> usize {
        self.experts.len()
    }

    pub fn spaces(&self, store: &ParamStore) -> Vec<ManifoldSpace> {
        self.experts.iter().map(|e| e.space(store)).collect()
    }

    /// `(ParamId, lo, hi)` clamps to re-apply after optimizer steps.
    pub fn curvature_clamps(&self) -> Vec<(ParamId, f64, f64)> {
        self.experts
            .iter()
            .map(|e| {
                let (lo, hi) = e.kappa_bounds();
                (e.kappa, lo, hi)
            })
            .collect()
    }
}

/// Registers K experts. Weights use the scaled-uniform init
/// ±√(6/(fan_in + fan_out)); biases start at zero; draw order is fixed so a
/// seed pins every parameter.
pub fn init_expert_bank(
    store: &mut ParamStore,
    k: usize,
    init_curvatures: &[f64],
    dims: ExpertDims,
    seed: u64,
) -> Result<ExpertBank, ExpertError> {
    if k == 0 {
        return Err(ExpertError::Usage("expert count must be >= 1".into()));
    }
    if init_curvatures.len() != k {
        return Err(ExpertError::Usage(format!(
            "got {} initial curvatures for {k} experts",
            init_curvatures.len()
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut experts = Vec::with_capacity(k);
    for (i, &kappa0) in init_curvatures.iter().enumerate() {
        let prefix = format!("expert_{i}");
        let kappa = store.register(
            format!("{prefix}/kappa"),
            Value::scalar(kappa0),
            ParamKind::Curvature,
            kappa0 != 0.0,
        );
        let w_in = store.register(
            format!("{prefix}/w_in"),
            glorot(&mut rng, dims.d_h, dims.d_in),
            ParamKind::Weight,
            true,
        );
        let b_in = store.register(
            format!("{prefix}/b_in"),
            Value::vector(vec![0.0; dims.d_h]),
            ParamKind::Bias,
            true,
        );
        let w1 = store.register(
            format!("{prefix}/layer_1/w"),
            glorot(&mut rng, dims.d_h, dims.d_h),
            ParamKind::Weight,
            true,
        );
        let b1 = store.register(
            format!("{prefix}/layer_1/b"),
            Value::vector(vec![0.0; dims.d_h]),
            ParamKind::Bias,
            true,
        );
        let w2 = store.register(
            format!("{prefix}/layer_2/w"),
            glorot(&mut rng, dims.d_out, dims.d_h),
            ParamKind::Weight,
            true,
        );
        let b2 = store.register(
            format!("{prefix}/layer_2/b"),
            Value::vector(vec![0.0; dims.d_out]),
            ParamKind::Bias,
            true,
        );
        experts.push(RiemannianExpert { index: i, kappa0, kappa, w_in, b_in, w1, b1, w2, b2 });
    }
    Ok(ExpertBank { experts, dims })
}

pub(crate) fn glorot(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> Value {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
    Value::matrix(rows, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dims() -> ExpertDims {
        ExpertDims { d_in: 3, d_h: 4, d_out: 4 }
    }

    fn path_graph(n: usize) -> Graph {
        let edges: Vec<(u32, u32)> = (0..n as u32 - 1).map(|i| (i, i + 1)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    fn feature_leaves(tape: &mut Tape, rows: &[Vec<f64>]) -> Vec<NodeId> {
        rows.iter().map(|r| tape.vector(r)).collect()
    }

    fn rand_features(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect()).collect()
    }

    #[test]
    fn bank_init_is_deterministic_and_typed() {
        let mut s1 = ParamStore::new();
        let b1 = init_expert_bank(&mut s1, 5, &[-3.0, -1.0, 0.0, 1.0, 3.0], tiny_dims(), 9).unwrap();
        let mut s2 = ParamStore::new();
        let _ = init_expert_bank(&mut s2, 5, &[-3.0, -1.0, 0.0, 1.0, 3.0], tiny_dims(), 9).unwrap();
        for (a, b) in s1.iter().zip(s2.iter()) {
            assert_eq!(a.1.value, b.1.value);
        }
        let negatives = b1.experts.iter().filter(|e| e.kappa0 < 0.0).count();
        let positives = b1.experts.iter().filter(|e| e.kappa0 > 0.0).count();
        let flat = b1.experts.iter().filter(|e| e.kappa0 == 0.0).count();
        assert_eq!((negatives, flat, positives), (2, 1, 2));
        // The Euclidean expert's curvature is frozen.
        let eu = &b1.experts[2];
        assert!(!s1.get(eu.kappa).trainable);
    }

    #[test]
    fn zero_experts_is_usage_error() {
        let mut s = ParamStore::new();
        assert!(init_expert_bank(&mut s, 0, &[], tiny_dims(), 0).is_err());
    }

    #[test]
    fn single_euclidean_bank_is_valid() {
        let mut s = ParamStore::new();
        let b = init_expert_bank(&mut s, 1, &[0.0], tiny_dims(), 0).unwrap();
        assert_eq!(b.k(), 1);
    }

    #[test]
    fn project_features_zero_row_hits_origin() {
        let mut store = ParamStore::new();
        let bank = init_expert_bank(&mut store, 1, &[-1.0], tiny_dims(), 3).unwrap();
        let e = &bank.experts[0];
        // Zero the input projection bias is already zero; feed a zero row.
        let mut tape = Tape::new();
        let space = e.tape_space(&mut tape, &store).unwrap();
        let x = tape.vector(&[0.0, 0.0, 0.0]);
        let h = e.project_features_t(&mut tape, &store, &space, &[x]).unwrap();
        assert!(tape.data(h[0]).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn project_features_stays_in_ball() {
        let mut store = ParamStore::new();
        let bank = init_expert_bank(&mut store, 1, &[-1.0], tiny_dims(), 3).unwrap();
        let e = &bank.experts[0];
        let feats = rand_features(6, 3, 17);
        let mut tape = Tape::new();
        let space = e.tape_space(&mut tape, &store).unwrap();
        let xs = feature_leaves(&mut tape, &feats);
        let h = e.project_features_t(&mut tape, &store, &space, &xs).unwrap();
        for id in h {
            let n: f64 = tape.data(id).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(n < 1.0, "point escaped the unit ball: {n}");
        }
    }

    /// The Euclidean expert must reduce to a conventional mean-aggregation
    /// GNN computed with plain loops on the same parameters.
    #[test]
    fn euclidean_expert_degenerates_to_plain_gnn() {
        let dims = tiny_dims();
        let mut store = ParamStore::new();
        let bank = init_expert_bank(&mut store, 1, &[0.0], dims, 21).unwrap();
        let e = &bank.experts[0];
        let g = path_graph(6);
        let feats = rand_features(6, dims.d_in, 4);

        let mut tape = Tape::new();
        let space = e.tape_space(&mut tape, &store).unwrap();
        let xs = feature_leaves(&mut tape, &feats);
        let out = e.forward_t(&mut tape, &store, &space, &g, &xs).unwrap();

        // Plain reference implementation.
        let matvec = |w: &Value, x: &[f64]| -> Vec<f64> {
            let (r, c) = match w.shape {
                crate::autodiff::Shape::Matrix(r, c) => (r, c),
                _ => unreachable!(),
            };
            (0..r)
                .map(|i| (0..c).map(|j| w.data[i * c + j] * x[j]).sum())
                .collect()
        };
        let mut h: Vec<Vec<f64>> = feats
            .iter()
            .map(|row| {
                let mut v = matvec(store.value(e.w_in), row);
                for (vi, bi) in v.iter_mut().zip(&store.value(e.b_in).data) {
                    *vi += bi;
                }
                v
            })
            .collect();
        for (layer, (w_id, b_id)) in [(e.w1, e.b1), (e.w2, e.b2)].iter().enumerate() {
            let w = store.value(*w_id).clone();
            let b = store.value(*b_id).clone();
            let mut next = Vec::new();
            for u in 0..6u32 {
                let mut members: Vec<&Vec<f64>> = vec![&h[u as usize]];
                members.extend(g.neighbors(u).iter().map(|&v| &h[v as usize]));
                let k = members.len() as f64;
                let mean: Vec<f64> = (0..h[0].len())
                    .map(|i| members.iter().map(|m| m[i]).sum::<f64>() / k)
                    .collect();
                let mut z = matvec(&w, &mean);
                for (zi, bi) in z.iter_mut().zip(&b.data) {
                    *zi += bi;
                }
                if layer == 0 {
                    for zi in z.iter_mut() {
                        *zi = zi.max(0.0);
                    }
                }
                next.push(z);
            }
            h = next;
        }

        for (id, expect) in out.iter().zip(&h) {
            for (a, b) in tape.data(*id).iter().zip(expect) {
                assert!((a - b).abs() < 1e-12, "euclidean degeneration mismatch");
            }
        }
    }

    /// Hyperbolic forward against an independent straight-line re-derivation
    /// of the layer rule using the pure manifold ops.
    #[test]
    fn hyperbolic_forward_matches_straight_line_oracle() {
        let dims = tiny_dims();
        let mut store = ParamStore::new();
        let bank = init_expert_bank(&mut store, 1, &[-1.0], dims, 5).unwrap();
        let e = &bank.experts[0];
        let g = path_graph(6);
        let feats = rand_features(6, dims.d_in, 8);

        let mut tape = Tape::new();
        let space = e.tape_space(&mut tape, &store).unwrap();
        let xs = feature_leaves(&mut tape, &feats);
        let out = e.forward_t(&mut tape, &store, &space, &g, &xs).unwrap();

        let space = ManifoldSpace::new(-1.0);
        let matvec = |w: &Value, x: &[f64]| -> Vec<f64> {
            let (r, c) = match w.shape {
                crate::autodiff::Shape::Matrix(r, c) => (r, c),
                _ => unreachable!(),
            };
            (0..r)
                .map(|i| (0..c).map(|j| w.data[i * c + j] * x[j]).sum())
                .collect()
        };
        let mut h: Vec<Vec<f64>> = feats
            .iter()
            .map(|row| {
                let mut v = matvec(store.value(e.w_in), row);
                for (vi, bi) in v.iter_mut().zip(&store.value(e.b_in).data) {
                    *vi += bi;
                }
                space.exp0(&v)
            })
            .collect();
        for (layer, (w_id, b_id)) in [(e.w1, e.b1), (e.w2, e.b2)].iter().enumerate() {
            let w = store.value(*w_id).clone();
            let b = store.value(*b_id).clone();
            let tangents: Vec<Vec<f64>> = h.iter().map(|p| space.log0(p)).collect();
            let mut next = Vec::new();
            for u in 0..6u32 {
                let mut members: Vec<&Vec<f64>> = vec![&tangents[u as usize]];
                members.extend(g.neighbors(u).iter().map(|&v| &tangents[v as usize]));
                let k = members.len() as f64;
                let mean: Vec<f64> = (0..dims.d_h)
                    .map(|i| members.iter().map(|m| m[i]).sum::<f64>() / k)
                    .collect();
                let mut z = matvec(&w, &mean);
                for (zi, bi) in z.iter_mut().zip(&b.data) {
                    *zi += bi;
                }
                if layer == 0 {
                    for zi in z.iter_mut() {
                        *zi = zi.max(0.0);
                    }
                }
                next.push(space.exp0(&z));
            }
            h = next;
        }

        for (id, expect) in out.iter().zip(&h) {
            for (a, b) in tape.data(*id).iter().zip(expect) {
                assert!((a - b).abs() < 1e-12, "hyperbolic forward mismatch: {a} vs {b}");
            }
        }
    }

    #[test]
    fn single_node_graph_forward_runs() {
        let dims = tiny_dims();
        let mut store = ParamStore::new();
        let bank = init_expert_bank(&mut store, 1, &[1.0], dims, 2).unwrap();
        let g = Graph::from_edges(1, &[]).unwrap();
        let mut tape = Tape::new();
        let space = bank.experts[0].tape_space(&mut tape, &store).unwrap();
        let xs = feature_leaves(&mut tape, &rand_features(1, dims.d_in, 0));
        let out = bank.experts[0].forward_t(&mut tape, &store, &space, &g, &xs).unwrap();
        assert_eq!(out.len(), 1);
        assert!(tape.value(out[0]).is_finite());
    }

    #[test]
    fn kappa_bounds_preserve_sign() {
        let mut store = ParamStore::new();
        let bank =
            init_expert_bank(&mut store, 3, &[-1.0, 0.0, 0.3], tiny_dims(), 0).unwrap();
        let (lo, hi) = bank.experts[0].kappa_bounds();
        assert!((lo, hi) == (-1.5, -0.5));
        let (lo, hi) = bank.experts[1].kappa_bounds();
        assert!((lo, hi) == (0.0, 0.0));
        let (lo, hi) = bank.experts[2].kappa_bounds();
        assert!(lo > 0.0 && hi > lo);
    }
}
