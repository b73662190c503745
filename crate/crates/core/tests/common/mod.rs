//! Random inputs shared by the integration test targets.
#![allow(dead_code)]

use linkage_tune::{
    sample_rings_disks, ClusterTree, ClusteringInstance, DistanceMatrix, GaussianBlobsSpec,
    InstanceGenerator, InstanceRng, MatrixSlot, MetricKind, RingsDisksSpec,
};
use rand::seq::SliceRandom;
use rand::Rng;

/// Euclidean distances between `n` fresh uniform points in `[0, 1]^dim`.
pub fn random_metric(rng: &mut InstanceRng, n: usize, dim: usize) -> DistanceMatrix {
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    DistanceMatrix::from_fn(n, |i, j| {
        Ok(pts[i]
            .iter()
            .zip(&pts[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    })
    .unwrap()
}

/// Labels `0..k`, each used at least once, in random order.
pub fn random_labels(rng: &mut InstanceRng, n: usize, k: usize) -> Vec<String> {
    let mut labels: Vec<usize> = (0..n)
        .map(|i| if i < k { i } else { rng.random_range(0..k) })
        .collect();
    labels.shuffle(rng);
    labels.iter().map(|l| format!("c{l}")).collect()
}

/// An instance with `5 <= n <= 30` from one of three generators, with
/// Euclidean distances in slot 0 and an unrelated random metric in slot 1.
pub fn mixed_instance(rng: &mut InstanceRng) -> ClusteringInstance {
    let mut inst = match rng.random_range(0..3) {
        0 => {
            let spec = RingsDisksSpec::with_points_per_cluster(rng.random_range(2..=7));
            sample_rings_disks(&spec, rng).unwrap()
        }
        1 => {
            let clusters = rng.random_range(2..=4);
            let spec = GaussianBlobsSpec {
                clusters,
                points_per_cluster: rng.random_range(3..=30 / clusters),
                dim: rng.random_range(1..=4),
                std_dev: rng.random_range(0.05..0.5),
            };
            spec.sample(rng).unwrap()
        }
        _ => {
            let n = rng.random_range(5..=30);
            let k = rng.random_range(1..=4);
            let labels = random_labels(rng, n, k);
            ClusteringInstance::from_matrices(&labels, random_metric(rng, n, 3), None).unwrap()
        }
    };
    inst.ensure_matrix(MatrixSlot::Zero, MetricKind::Euclidean)
        .unwrap();
    let second = random_metric(rng, inst.len(), 2);
    inst.set_matrix(MatrixSlot::One, second).unwrap();
    inst
}

/// A uniformly random merge order over `n` leaves.
pub fn random_tree(rng: &mut InstanceRng, n: usize) -> ClusterTree {
    let mut roots: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    while roots.len() > 1 {
        let a = roots.swap_remove(rng.random_range(0..roots.len()));
        let b = roots.swap_remove(rng.random_range(0..roots.len()));
        roots.push(n + merges.len());
        merges.push((a, b));
    }
    ClusterTree::from_merges(n, merges).unwrap()
}

/// True when `t` is within `tol` of an interior breakpoint.
pub fn near_breakpoint(breakpoints: &[f64], t: f64, tol: f64) -> bool {
    breakpoints[1..breakpoints.len() - 1]
        .iter()
        .any(|c| (c - t).abs() <= tol)
}
