//! Adam with decoupled weight decay. Decay touches weight matrices only;
//! curvatures are re-clamped into their sign-preserving intervals after
//! every step.

use crate::autodiff::{GradientMap, ParamId, ParamKind, ParamStore};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// First/second-moment accumulators, shaped exactly like the parameters.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    /// Parameters skipped because their gradient went non-finite.
    pub skipped_nonfinite: u64,
}

impl AdamState {
    pub fn new(store: &ParamStore) -> AdamState {
        let m = store.ids().map(|id| vec![0.0; store.value(id).data.len()]).collect();
        let v = store.ids().map(|id| vec![0.0; store.value(id).data.len()]).collect();
        AdamState { step: 0, m, v, skipped_nonfinite: 0 }
    }
}

/// One optimizer step. Parameters absent from `grads` are untouched;
/// parameters with a non-finite gradient are skipped (counted and logged).
pub fn adam_step(
    store: &mut ParamStore,
    state: &mut AdamState,
    grads: &GradientMap,
    lr: f64,
    weight_decay: f64,
    curvature_clamps: &[(ParamId, f64, f64)],
) {
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - BETA1.powf(t);
    let bc2 = 1.0 - BETA2.powf(t);

    for id in store.ids().collect::<Vec<_>>() {
        let g = match grads.get(id) {
            Some(g) => g,
            None => continue,
        };
        if !g.is_finite() {
            state.skipped_nonfinite += 1;
            log::warn!(
                "skipping non-finite gradient for `{}` (step {})",
                store.get(id).name,
                state.step
            );
            continue;
        }
        let kind = store.get(id).kind;
        let m = &mut state.m[id.0];
        let v = &mut state.v[id.0];
        let theta = &mut store.value_mut(id).data;
        for i in 0..theta.len() {
            let gi = g.data[i];
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * gi;
            v[i] = BETA2 * v[i] + (1.0 - BETA2) * gi * gi;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            theta[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
            if weight_decay > 0.0 && kind == ParamKind::Weight {
                theta[i] -= lr * weight_decay * theta[i];
            }
        }
    }

    for &(id, lo, hi) in curvature_clamps {
        let val = &mut store.value_mut(id).data;
        for x in val.iter_mut() {
            *x = x.clamp(lo, hi);
        }
    }
}
