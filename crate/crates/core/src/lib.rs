//! Exact parameter sweeps for interpolated linkage clustering.
//!
//! Two one-parameter families of agglomerative clustering are supported:
//!
//! * the merge family, which interpolates two merge functions
//!   (`D_alpha = (1 - alpha) D0 + alpha D1`, e.g. single to complete
//!   linkage), and
//! * the metric family, which runs complete linkage over an interpolated
//!   distance `d_beta = (1 - beta) d0 + beta d1`.
//!
//! For one labelled instance, [`piecewise_loss`] enumerates every cluster
//! tree the family can output together with the exact parameter interval
//! producing it, and scores each tree by its best pruning against the
//! target labels. [`average_piecewise`] and [`argmin_interval`] then pick
//! the parameter with the lowest average loss over a sample.
//!
//! ```
//! use linkage_tune::{
//!     argmin_interval, piecewise_loss, FamilySpec, MatrixSlot, MetricKind,
//!     ClusteringInstance,
//! };
//!
//! let features = vec![vec![0.0], vec![0.4], vec![1.0], vec![3.0], vec![3.3]];
//! let labels = ["a", "a", "a", "b", "b"];
//! let mut inst = ClusteringInstance::from_features(features, &labels)?;
//! inst.ensure_matrix(MatrixSlot::Zero, MetricKind::Euclidean)?;
//!
//! let loss = piecewise_loss(&inst, &FamilySpec::single_complete())?;
//! let (_, best, _) = argmin_interval(&loss);
//! assert_eq!(best, 0.0);
//! # Ok::<(), linkage_tune::Error>(())
//! ```

pub mod erm;
pub mod error;
pub mod exec_tree;
pub mod instance;
pub mod linkage;
pub mod metric;
pub mod piecewise;
pub mod pruning;
pub mod sweep;
pub mod synth;
pub mod tree;

pub use erm::{argmin_interval, average_piecewise, generalization_report, GeneralizationReport};
pub use error::{Error, Result};
pub use exec_tree::{
    enumerate_leaves, for_each_leaf, piecewise_loss, piecewise_loss_with_stats, ExecutionNode,
    SweepDiagnostics, TraversalStats,
};
pub use instance::{ClusteringInstance, MatrixSlot};
pub use linkage::{
    alpha_merge_distance, closest_pair, merge_distance, merge_witness, run_linkage, tie_key,
    Cluster, FamilySpec, MergeFunctionKind,
};
pub use metric::{
    cosine_distance, euclidean_distance, interpolated_distance, interpolated_matrix,
    pairwise_matrix, stroke_distance, DistanceMatrix, MetricKind, StrokeTrajectory,
};
pub use piecewise::{ParameterInterval, PiecewiseConstantLoss};
pub use pruning::{brute_force_loss, hamming_pruning_loss, hamming_pruning_mismatches, K_MAX};
pub use sweep::{critical_alpha, find_merges_alpha, find_merges_beta, MergeEvent, SWEEP_EPS};
pub use synth::{
    rng_from_seed, sample_instances, sample_rings_disks, GaussianBlobsSpec, InstanceGenerator,
    InstanceRng, RingsDisksSpec,
};
pub use tree::{ClusterTree, NodeId};

/// Runs the code blocks of the guide in `book/` as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/linkage.md")]
    mod linkage {}
    #[doc = include_str!("../../../book/src/pruning.md")]
    mod pruning {}
    #[doc = include_str!("../../../book/src/sweep.md")]
    mod sweep {}
    #[doc = include_str!("../../../book/src/execution-tree.md")]
    mod execution_tree {}
    #[doc = include_str!("../../../book/src/erm.md")]
    mod erm {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
