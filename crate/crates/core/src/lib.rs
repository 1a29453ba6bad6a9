//! Incomplete multi-view learning toolkit.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`mvdata`] — multi-view datasets, existence masks, CSV ingestion,
//!   mask construction for the missing-view / incomplete-view settings,
//!   and a synthetic union-of-subspaces generator.
//! * [`numerics`] — the dense linear-algebra kernels the solvers need
//!   (pseudo-inverse, symmetric eigensolver, Sylvester solver, graph
//!   Laplacian, block-diagonal regularizer and the affinity projection).
//! * [`jella`] — the generic alternating-minimization skeletons shared by
//!   the solvers, plus stop rules and iteration traces.
//! * [`solvers`] — the concrete solvers: the block-diagonal-representation
//!   solver (basic and SOR-accelerated), a multi-view nonnegative
//!   factorization with an l1 penalty, and the unregularized low-rank
//!   baseline.
//! * [`clusteval`] — k-means on learned embeddings and clustering metrics
//!   (NMI, adjusted Rand index, RMSE).

pub mod clusteval;
pub mod jella;
pub mod mvdata;
pub mod numerics;
pub mod solvers;

pub use clusteval::{adj_rand_index, evaluate_embedding, kmeans, nmi, rmse, EvalReport};
pub use jella::{stop_rule_relative, IterationTrace, StopReason, StopRule};
pub use mvdata::{
    apply_incomplete_mask, apply_missing_view_mask, load_dataset, omega_sets,
    synth_union_of_subspaces, MultiViewDataset, OmegaSets, SynthSpec, ViewMatrix,
};
pub use solvers::{bdr_fit, mvliv_fit, pvc_fit, pvc_objective, BdrConfig, BdrState};
