//! Topology-aware gating: encode each node's multi-resolution ego nets with
//! a small Euclidean GNN, pool, concatenate across radii, and map the
//! characterization to a simplex of expert weights. The encoder sees
//! structure only (no raw node features), so the routing is purely
//! topological.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::autodiff::{NodeId, ParamKind, ParamStore, Result as AdResult, Tape, Value};
use crate::autodiff::ParamId;
use crate::experts::glorot;
use crate::graph::sample::Subgraph;

/// Channels fed to the subgraph encoder, per subgraph node.
pub const STRUCTURAL_CHANNELS: usize = 3;

/// Per-node structural rows for one subgraph:
/// `[max(1, deg) / max(1, max_deg), 1.0, center indicator]`.
/// The max(1, ·) guards keep singleton subgraphs well-defined.
pub fn structural_features(s: &Subgraph) -> Vec<[f64; STRUCTURAL_CHANNELS]> {
    let deg = s.local_degrees();
    let max_deg = deg.iter().copied().max().unwrap_or(0).max(1) as f64;
    deg.iter()
        .enumerate()
        .map(|(i, &d)| {
            [
                (d.max(1) as f64) / max_deg,
                1.0,
                if i == s.center_local { 1.0 } else { 0.0 },
            ]
        })
        .collect()
}

/// Gating network parameters: a shared 2-layer subgraph encoder ξ and a
/// 2-layer perceptron φ producing K expert logits.
#[derive(Clone, Debug)]
pub struct GatingNet {
    pub radii: Vec<usize>,
    pub d_t: usize,
    pub k: usize,
    pub xi_w1: ParamId,
    pub xi_b1: ParamId,
    pub xi_w2: ParamId,
    pub xi_b2: ParamId,
    pub phi_w1: ParamId,
    pub phi_b1: ParamId,
    pub phi_w2: ParamId,
    pub phi_b2: ParamId,
}

pub fn init_gating(
    store: &mut ParamStore,
    k: usize,
    d_t: usize,
    radii: &[usize],
    seed: u64,
) -> GatingNet {
    assert!(!radii.is_empty(), "gating needs at least one sampling radius");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let t_len = radii.len() * d_t;
    let xi_w1 = store.register(
        "gating/xi/layer_1/w",
        glorot(&mut rng, d_t, STRUCTURAL_CHANNELS),
        ParamKind::Weight,
        true,
    );
    let xi_b1 =
        store.register("gating/xi/layer_1/b", Value::vector(vec![0.0; d_t]), ParamKind::Bias, true);
    let xi_w2 =
        store.register("gating/xi/layer_2/w", glorot(&mut rng, d_t, d_t), ParamKind::Weight, true);
    let xi_b2 =
        store.register("gating/xi/layer_2/b", Value::vector(vec![0.0; d_t]), ParamKind::Bias, true);
    let phi_w1 =
        store.register("gating/phi/layer_1/w", glorot(&mut rng, d_t, t_len), ParamKind::Weight, true);
    let phi_b1 =
        store.register("gating/phi/layer_1/b", Value::vector(vec![0.0; d_t]), ParamKind::Bias, true);
    let phi_w2 =
        store.register("gating/phi/layer_2/w", glorot(&mut rng, k, d_t), ParamKind::Weight, true);
    let phi_b2 =
        store.register("gating/phi/layer_2/b", Value::vector(vec![0.0; k]), ParamKind::Bias, true);
    GatingNet { radii: radii.to_vec(), d_t, k, xi_w1, xi_b1, xi_w2, xi_b2, phi_w1, phi_b1, phi_w2, phi_b2 }
}

impl GatingNet {
    pub fn characterization_len(&self) -> usize {
        self.radii.len() * self.d_t
    }

    /// ξ on one subgraph: 2-layer mean-aggregation GNN over the structural
    /// rows, then mean pooling over subgraph nodes.
    fn encode_subgraph_t(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        s: &Subgraph,
    ) -> AdResult<NodeId> {
        let rows = structural_features(s);
        let adj = s.local_adjacency();
        let w1 = tape.param(store, self.xi_w1);
        let b1 = tape.param(store, self.xi_b1);
        let w2 = tape.param(store, self.xi_w2);
        let b2 = tape.param(store, self.xi_b2);

        let mut h: Vec<NodeId> = rows.iter().map(|r| tape.vector(r)).collect();
        for (layer, (w, b)) in [(w1, b1), (w2, b2)].iter().enumerate() {
            let mut next = Vec::with_capacity(h.len());
            for u in 0..h.len() {
                let mut members = vec![h[u]];
                members.extend(adj[u].iter().map(|&v| h[v as usize]));
                let agg = tape.mean_many(&members);
                let lin = tape.matvec(*w, agg);
                let pre = tape.add(lin, *b);
                next.push(if layer == 0 { tape.relu(pre) } else { pre });
            }
            h = next;
        }
        Ok(tape.mean_many(&h))
    }

    /// Multi-resolution characterization 𝒯_v: pooled encodings concatenated
    /// in radius order. `subs` must hold one subgraph per configured radius.
    pub fn encode_local_topology_t(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        subs: &[Subgraph],
    ) -> AdResult<NodeId> {
        assert_eq!(
            subs.len(),
            self.radii.len(),
            "need one subgraph per radius ({} != {})",
            subs.len(),
            self.radii.len()
        );
        let pooled: Vec<NodeId> = subs
            .iter()
            .map(|s| self.encode_subgraph_t(tape, store, s))
            .collect::<AdResult<_>>()?;
        Ok(tape.concat(&pooled))
    }

    /// φ then softmax: one simplex row of K expert weights per node.
    pub fn gate_t(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        characterization: NodeId,
    ) -> AdResult<NodeId> {
        let w1 = tape.param(store, self.phi_w1);
        let b1 = tape.param(store, self.phi_b1);
        let w2 = tape.param(store, self.phi_w2);
        let b2 = tape.param(store, self.phi_b2);
        let lin1 = tape.matvec(w1, characterization);
        let pre1 = tape.add(lin1, b1);
        let hid = tape.relu(pre1);
        let lin2 = tape.matvec(w2, hid);
        let logits = tape.add(lin2, b2);
        Ok(tape.softmax(logits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::sample::{sample_ego, sample_multi_resolution};
    use crate::graph::Graph;

    #[test]
    fn structural_rows_on_star() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let s = sample_ego(&g, 0, 1);
        let rows = structural_features(&s);
        // Center: max-degree node with the indicator set.
        assert_eq!(rows[s.center_local], [1.0, 1.0, 1.0]);
        // Leaves: degree 1 of max 3, no indicator.
        let leaf = (0..rows.len()).find(|&i| i != s.center_local).unwrap();
        assert_eq!(rows[leaf], [1.0 / 3.0, 1.0, 0.0]);
    }

    #[test]
    fn structural_rows_on_singleton() {
        let g = Graph::from_edges(2, &[]).unwrap();
        let s = sample_ego(&g, 0, 1);
        let rows = structural_features(&s);
        assert_eq!(rows, vec![[1.0, 1.0, 1.0]]);
    }

    #[test]
    fn isomorphic_ego_nets_encode_identically() {
        // Two leaves of the same star have isomorphic rooted ego nets.
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let mut store = ParamStore::new();
        let net = init_gating(&mut store, 4, 8, &[1], 3);
        let mut tape = Tape::new();
        let s1 = sample_ego(&g, 1, 1);
        let s2 = sample_ego(&g, 2, 1);
        let e1 = net.encode_local_topology_t(&mut tape, &store, &[s1]).unwrap();
        let e2 = net.encode_local_topology_t(&mut tape, &store, &[s2]).unwrap();
        for (a, b) in tape.data(e1).iter().zip(tape.data(e2)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cycle_characterizations_all_equal() {
        // C6 is vertex-transitive: every node sees the same rooted topology.
        let n = 6u32;
        let edges: Vec<(u32, u32)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let g = Graph::from_edges(n as usize, &edges).unwrap();
        let mut store = ParamStore::new();
        let net = init_gating(&mut store, 5, 8, &[1, 2], 7);
        let mut tape = Tape::new();
        let mut encodings = Vec::new();
        let mut weights = Vec::new();
        for v in 0..n {
            let subs = sample_multi_resolution(&g, v, &[1, 2]);
            let t = net.encode_local_topology_t(&mut tape, &store, &subs).unwrap();
            weights.push(net.gate_t(&mut tape, &store, t).unwrap());
            encodings.push(t);
        }
        let first: Vec<f64> = tape.data(encodings[0]).to_vec();
        for &e in &encodings[1..] {
            for (a, b) in tape.data(e).iter().zip(&first) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        // Isomorphic rooted topology implies equal expert weights.
        let first_w: Vec<f64> = tape.data(weights[0]).to_vec();
        for &w in &weights[1..] {
            for (a, b) in tape.data(w).iter().zip(&first_w) {
                assert!((a - b).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn gate_rows_live_on_the_simplex() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let mut store = ParamStore::new();
        let net = init_gating(&mut store, 5, 8, &[1, 2], 1);
        let mut tape = Tape::new();
        for v in 0..5u32 {
            let subs = sample_multi_resolution(&g, v, &[1, 2]);
            let t = net.encode_local_topology_t(&mut tape, &store, &subs).unwrap();
            let w = net.gate_t(&mut tape, &store, t).unwrap();
            let row = tape.data(w);
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9, "row sums to {sum}");
            assert!(row.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn zeroed_final_layer_gives_uniform_weights() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let mut store = ParamStore::new();
        let net = init_gating(&mut store, 5, 8, &[1], 2);
        // Zero φ's output layer.
        store.value_mut(net.phi_w2).data.iter_mut().for_each(|x| *x = 0.0);
        let mut tape = Tape::new();
        let subs = sample_multi_resolution(&g, 0, &[1]);
        let t = net.encode_local_topology_t(&mut tape, &store, &subs).unwrap();
        let w = net.gate_t(&mut tape, &store, t).unwrap();
        for &x in tape.data(w) {
            assert!((x - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn known_logits_softmax_value() {
        // softmax([2,0,0,0,0]) = [e^2, 1, 1, 1, 1] / (e^2 + 4).
        let mut tape = Tape::new();
        let logits = tape.vector(&[2.0, 0.0, 0.0, 0.0, 0.0]);
        let sm = tape.softmax(logits);
        let den = 2.0f64.exp() + 4.0;
        let row = tape.data(sm);
        assert!((row[0] - 2.0f64.exp() / den).abs() < 1e-12);
        for &x in &row[1..] {
            assert!((x - 1.0 / den).abs() < 1e-12);
        }
        assert!((row[0] - 0.6488).abs() < 5e-4);
    }
}
