//! Spectral graph reduction.
//!
//! Graphs are first reduced by node aggregation driven by Gauss–Seidel test
//! vectors and by spectral sparsification with edge scaling. The resulting
//! hierarchy accelerates spectral partitioning (a coarse eigensolve lifted
//! and smoothed level by level) and t-SNE on kNN graphs.

// `!(x > 0.0)` is how the checks here also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
mod amg;
pub mod error;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod linsolve;
pub mod partition;
pub mod pipeline;
pub mod refine;
pub mod scale;
pub mod sparsify;
pub mod tsne;

#[cfg(test)]
mod oracle;

pub use aggregate::{aggregate_nodes, gs_test_vectors, reduce_graph, MappingOperator, TestVectors};
pub use error::{Error, Result};
pub use graph::{Edge, Graph};
pub use partition::{
    cut_metrics, direct_spectral_partition, multilevel_spectral_partition, CutReport, CutType, Partition,
    SpectralPartition,
};
pub use pipeline::{reduction_report, spectral_reduce, Hierarchy, ReduceOptions, ReductionReport};
pub use scale::{sgd_edge_scaling, SgdParams};
pub use sparsify::{densify_to_similarity, spanning_tree, Sparsifier};
pub use tsne::{multilevel_tsne, tsne_embed, Dataset, Embedding, TsneParams};
