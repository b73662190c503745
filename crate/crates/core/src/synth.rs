//! Synthetic instance generators.
//!
//! All generators draw from [`ChaCha8Rng`] seeded with
//! [`SeedableRng::seed_from_u64`], so a `(spec, seed)` pair produces the same
//! instance on every platform.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{ClusteringInstance, MatrixSlot};
use crate::metric::MetricKind;

/// The random source used by every generator.
pub type InstanceRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Something that can draw one clustering instance from a seed.
pub trait InstanceGenerator {
    fn sample(&self, rng: &mut InstanceRng) -> Result<ClusteringInstance>;

    fn sample_seeded(&self, seed: u64) -> Result<ClusteringInstance> {
        self.sample(&mut rng_from_seed(seed))
    }
}

/// Draws `n` instances; instance `i` uses seed `base_seed + i` (wrapping).
pub fn sample_instances<G: InstanceGenerator + ?Sized>(
    generator: &G,
    n: usize,
    base_seed: u64,
) -> Result<Vec<ClusteringInstance>> {
    if n == 0 {
        return Err(Error::invalid("number of instances must be positive"));
    }
    (0..n as u64)
        .map(|i| generator.sample_seeded(base_seed.wrapping_add(i)))
        .collect()
}

/// Two concentric rings around the origin and two touching disks to the
/// right. Rings are circles sampled uniformly by angle; disks are sampled
/// uniformly by area.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingsDisksSpec {
    pub points_per_cluster: usize,
    pub ring_radii: [f64; 2],
    pub disk_radius: f64,
    pub disk_centers: [[f64; 2]; 2],
}

impl Default for RingsDisksSpec {
    fn default() -> Self {
        RingsDisksSpec {
            points_per_cluster: 100,
            ring_radii: [0.4, 0.8],
            disk_radius: 0.4,
            disk_centers: [[1.5, 0.4], [1.5, -0.4]],
        }
    }
}

impl RingsDisksSpec {
    pub fn with_points_per_cluster(points_per_cluster: usize) -> Self {
        RingsDisksSpec {
            points_per_cluster,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_cluster == 0 {
            return Err(Error::invalid("points_per_cluster must be at least 1"));
        }
        let radii_ok = self
            .ring_radii
            .iter()
            .chain([&self.disk_radius])
            .all(|r| r.is_finite() && *r > 0.0);
        if !radii_ok {
            return Err(Error::invalid("ring and disk radii must be positive"));
        }
        Ok(())
    }
}

pub const RING_LABELS: [&str; 2] = ["ring0", "ring1"];
pub const DISK_LABELS: [&str; 2] = ["disk0", "disk1"];

/// Samples one rings-and-disks instance with its Euclidean matrix in slot 0.
pub fn sample_rings_disks(
    spec: &RingsDisksSpec,
    rng: &mut InstanceRng,
) -> Result<ClusteringInstance> {
    spec.validate()?;
    let m = spec.points_per_cluster;
    let mut features = Vec::with_capacity(4 * m);
    let mut labels = Vec::with_capacity(4 * m);
    for (r, label) in spec.ring_radii.iter().zip(RING_LABELS) {
        for _ in 0..m {
            let angle = rng.random::<f64>() * TAU;
            features.push(vec![r * angle.cos(), r * angle.sin()]);
            labels.push(label);
        }
    }
    for (c, label) in spec.disk_centers.iter().zip(DISK_LABELS) {
        for _ in 0..m {
            let angle = rng.random::<f64>() * TAU;
            let radius = spec.disk_radius * rng.random::<f64>().sqrt();
            features.push(vec![
                c[0] + radius * angle.cos(),
                c[1] + radius * angle.sin(),
            ]);
            labels.push(label);
        }
    }
    let mut inst = ClusteringInstance::from_features(features, &labels)?;
    inst.ensure_matrix(MatrixSlot::Zero, MetricKind::Euclidean)?;
    Ok(inst)
}

impl InstanceGenerator for RingsDisksSpec {
    fn sample(&self, rng: &mut InstanceRng) -> Result<ClusteringInstance> {
        sample_rings_disks(self, rng)
    }
}

/// Isotropic Gaussian blobs with centers drawn uniformly in `[-1, 1]^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianBlobsSpec {
    pub clusters: usize,
    pub points_per_cluster: usize,
    pub dim: usize,
    pub std_dev: f64,
}

impl InstanceGenerator for GaussianBlobsSpec {
    fn sample(&self, rng: &mut InstanceRng) -> Result<ClusteringInstance> {
        if self.clusters == 0 || self.points_per_cluster == 0 || self.dim == 0 {
            return Err(Error::invalid(
                "gaussian blobs need clusters, points and dim > 0",
            ));
        }
        let noise = Normal::new(0.0, self.std_dev)
            .map_err(|e| Error::invalid(format!("bad std_dev: {e}")))?;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for c in 0..self.clusters {
            let center: Vec<f64> = (0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            for _ in 0..self.points_per_cluster {
                features.push(center.iter().map(|x| x + noise.sample(rng)).collect());
                labels.push(format!("c{c}"));
            }
        }
        let mut inst = ClusteringInstance::from_features(features, &labels)?;
        inst.ensure_matrix(MatrixSlot::Zero, MetricKind::Euclidean)?;
        Ok(inst)
    }
}
