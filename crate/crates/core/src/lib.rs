//! Graph similarity through fast belief-propagation affinities.
//!
//! Two graphs on the same node set are compared by solving a sparse linear
//! system per node (or per node group) and measuring how far the resulting
//! affinity matrices drift apart.

pub mod affinity;
pub mod baselines;
pub mod bench;
pub mod cluster;
pub mod deltacon;
pub mod error;
pub mod generate;
pub mod graph;
pub mod properties;
pub mod temporal;

pub use affinity::{
    full_affinity, random_partition, reduced_affinity, solve_affinity_column, AffinityKind,
    AffinityMatrix, Partition, SolverConfig,
};
pub use baselines::{ged, lambda_distance, spectrum, veo, Spectrum};
pub use cluster::{pairwise_similarity, ward_cluster, Dendrogram};
pub use deltacon::{
    deltacon, deltacon0, deltacon_mean, rooted, sim_from_distance, similarity, DeltaConOptions,
    Method, SimilarityResult, Variant,
};
pub use error::{Error, Result};
pub use generate::{generate, generate_named, TopologySpec};
pub use graph::{
    epsilon, load_edge_list, shared_epsilon, union_node_space, Edge, Graph, MatrixKind,
};
pub use temporal::{control_limits, similarity_timeline, AnomalyReport};
