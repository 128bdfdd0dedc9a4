//! Trainable parameter storage and gradient maps.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Value;

/// Index of a parameter in its [`ParamStore`]. Stable for the lifetime of
/// the store; registration order is the canonical iteration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

/// Parameter category. Decoupled weight decay applies to `Weight` only;
/// `Curvature` parameters are re-clamped after every optimizer step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    Weight,
    Bias,
    Curvature,
}

#[derive(Clone, Debug)]
pub struct Param {
    pub name: String,
    pub value: Value,
    pub kind: ParamKind,
    pub trainable: bool,
}

/// Ordered collection of named parameters. The order of registration is
/// deterministic and doubles as the checkpoint layout.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    params: Vec<Param>,
}

impl ParamStore {
    pub fn new() -> ParamStore {
        ParamStore::default()
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        value: Value,
        kind: ParamKind,
        trainable: bool,
    ) -> ParamId {
        let name = name.into();
        assert!(
            self.params.iter().all(|p| p.name != name),
            "duplicate parameter name `{name}`"
        );
        self.params.push(Param { name, value, kind, trainable });
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Value {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Value {
        &mut self.params[id.0].value
    }

    pub fn lookup(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }
}

/// Adjoints of a scalar root with respect to every trainable parameter that
/// participated in the evaluated expression.
#[derive(Debug, Default)]
pub struct GradientMap {
    grads: HashMap<ParamId, Value>,
}

impl GradientMap {
    pub fn new() -> GradientMap {
        GradientMap::default()
    }

    pub fn get(&self, id: ParamId) -> Option<&Value> {
        self.grads.get(&id)
    }

    pub fn insert(&mut self, id: ParamId, g: Value) {
        self.grads.insert(id, g);
    }

    pub fn contains(&self, id: ParamId) -> bool {
        self.grads.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    /// Parameter ids in ascending order, for deterministic iteration.
    pub fn sorted_ids(&self) -> Vec<ParamId> {
        let mut ids: Vec<ParamId> = self.grads.keys().copied().collect();
        ids.sort();
        ids
    }
}
