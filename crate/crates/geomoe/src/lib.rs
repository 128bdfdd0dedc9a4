//! Heterogeneous-curvature graph embedding.
//!
//! A bank of constant-curvature (κ-stereographic) GNN experts embeds every
//! node in spaces of different curvature; a topology-aware gating network
//! reads multi-resolution ego-net encodings and mixes the experts per node,
//! so the graph effectively lives on a manifold whose curvature varies from
//! point to point. Pairwise distances across the per-node spaces go through
//! an alignment of the two nodes' expert weights, and training minimizes a
//! task loss plus an embedding-distortion penalty against shortest-path
//! distances.
//!
//! Modules:
//! - [`autodiff`]: reverse-mode tape over f64 scalars/vectors/matrices;
//! - [`manifold`]: κ-stereographic geometry (Möbius addition, origin
//!   exp/log maps, geodesic distance, geodesic scaling);
//! - [`graph`]: graph storage, ingestion, BFS, ego-net sampling, synthetic
//!   heterogeneous graphs, sectional curvature, edge splits;
//! - [`experts`]: the Riemannian GNN expert bank;
//! - [`gating`]: multi-resolution topology encoding and expert weighting;
//! - [`mixture`]: embedding fusion, pair alignment, blended distances, and
//!   the Fermi-Dirac edge decoder;
//! - [`training`]: losses, Adam, checkpoints, and the training loop;
//! - [`report`]: metrics and machine-readable report emission.

pub mod autodiff;
pub mod experts;
pub mod gradcheck;
pub mod gating;
pub mod graph;
pub mod manifold;
pub mod mixture;
pub mod report;
pub mod training;

pub use autodiff::{
    finite_difference_check, GradientMap, ParamId, ParamKind, ParamStore, Shape, Tape, Value,
};
pub use experts::{init_expert_bank, ExpertBank, ExpertDims, RiemannianExpert};
pub use gating::{init_gating, structural_features, GatingNet};
pub use graph::{Graph, GraphError};
pub use manifold::{ManifoldSpace, BOUNDARY_EPS};
pub use report::{EpochRow, EvalReport};
pub use training::{train, Model, TaskKind, TrainConfig, TrainOutcome, TrainingError};
