//! Versioned JSON checkpoints: parameter names, kinds, shapes, and
//! row-major values. Restore requires an exact name/shape match against a
//! freshly built model so a checkpoint can never silently rewire.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{ParamKind, ParamStore, Shape, Value};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint parse error: {0}")]
    Parse(String),
    #[error("checkpoint version {found} unsupported (expected {CHECKPOINT_VERSION})")]
    Version { found: u32 },
    #[error("checkpoint mismatch: {0}")]
    Mismatch(String),
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct CheckpointParam {
    pub name: String,
    pub kind: ParamKind,
    pub trainable: bool,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct Checkpoint {
    pub version: u32,
    pub params: Vec<CheckpointParam>,
}

impl Checkpoint {
    pub fn from_store(store: &ParamStore) -> Checkpoint {
        let params = store
            .iter()
            .map(|(_, p)| CheckpointParam {
                name: p.name.clone(),
                kind: p.kind,
                trainable: p.trainable,
                shape: p.value.shape.dims(),
                data: p.value.data.clone(),
            })
            .collect();
        Checkpoint { version: CHECKPOINT_VERSION, params }
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CheckpointError::Parse(format!("{e}")))?;
        std::fs::write(path, json).map_err(|e| CheckpointError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
        let text = std::fs::read_to_string(path).map_err(|e| CheckpointError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let ck: Checkpoint =
            serde_json::from_str(&text).map_err(|e| CheckpointError::Parse(format!("{e}")))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version { found: ck.version });
        }
        Ok(ck)
    }

    /// Overwrites `store`'s values from the checkpoint. The parameter lists
    /// must agree in names, order, and shapes.
    pub fn restore_into(&self, store: &mut ParamStore) -> Result<(), CheckpointError> {
        if self.params.len() != store.len() {
            return Err(CheckpointError::Mismatch(format!(
                "checkpoint has {} parameters, model has {}",
                self.params.len(),
                store.len()
            )));
        }
        for (id, cp) in store.ids().collect::<Vec<_>>().into_iter().zip(&self.params) {
            let name = store.get(id).name.clone();
            if name != cp.name {
                return Err(CheckpointError::Mismatch(format!(
                    "parameter `{name}` does not match checkpoint entry `{}`",
                    cp.name
                )));
            }
            let shape = Shape::from_dims(&cp.shape).ok_or_else(|| {
                CheckpointError::Mismatch(format!("bad shape {:?} for `{}`", cp.shape, cp.name))
            })?;
            if shape != store.value(id).shape {
                return Err(CheckpointError::Mismatch(format!(
                    "shape mismatch for `{}`: {:?} vs {:?}",
                    cp.name,
                    shape,
                    store.value(id).shape
                )));
            }
            if cp.data.len() != shape.len() {
                return Err(CheckpointError::Mismatch(format!(
                    "data length {} does not match shape {:?} for `{}`",
                    cp.data.len(),
                    cp.shape,
                    cp.name
                )));
            }
            *store.value_mut(id) = Value { data: cp.data.clone(), shape };
        }
        Ok(())
    }
}
