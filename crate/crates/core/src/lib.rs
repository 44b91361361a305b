//! Clustering of multi-objective RL solution sets in objective and behavior
//! space at once.
//!
//! The pipeline: generate a Pareto set of tabular policies ([`fixture`]),
//! extract a behavior matrix per policy ([`highlights`]), build distance
//! matrices ([`spaces`]), evolve a front of partitionings ([`pan`]) and compare
//! it with per-space k-medoids ([`baselines`]).

pub mod baselines;
pub mod error;
pub mod fixture;
pub mod highlights;
pub mod metrics;
pub mod pan;
pub mod rng;
pub mod solution;
pub mod spaces;

pub use error::{Error, Result};
pub use metrics::{ari, hypervolume_2d, objective_pair, sankey_links, silhouette, REFERENCE_POINT};
pub use pan::{pan_run, PanParams, PanTrace, TraceRecord};
pub use solution::{
    BehaviorMatrix, DistanceMatrix, ObjectivePair, Partitioning, PartitioningFront, Policy, Sense, SolutionSet,
    Space,
};
pub use spaces::{distance_matrix, Normalization};
