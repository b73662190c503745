//! Base metrics, precomputed distance matrices and metric interpolation.
//!
//! Everything downstream of this module reads distances out of a
//! [`DistanceMatrix`]; raw feature vectors are only touched once, when the
//! matrix is built.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense, symmetric `n x n` matrix of pairwise distances with a zero
/// diagonal.
#[derive(Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from row-major data, checking symmetry (bitwise),
    /// zero diagonal and nonnegative finite entries.
    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::invalid(format!(
                "distance matrix has {} entries, expected {}",
                data.len(),
                n * n
            )));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::invalid(format!(
                    "diagonal entry ({i},{i}) is not zero"
                )));
            }
            for j in 0..n {
                let v = data[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(format!(
                        "entry ({i},{j}) = {v} is not a nonnegative finite real"
                    )));
                }
                if v.to_bits() != data[j * n + i].to_bits() {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { n, data })
    }

    /// Builds a matrix by evaluating `f(i, j)` once per unordered pair `i < j`
    /// and mirroring the result.
    pub fn from_fn<F>(n: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<f64>,
    {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j)?;
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        DistanceMatrix::from_rows(n, data)
    }

    /// Applies `f` to every off-diagonal entry. `f` should be nonnegative on
    /// nonnegative inputs.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        let n = self.n;
        DistanceMatrix::from_fn(n, |i, j| Ok(f(self.get(i, j))))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

impl fmt::Debug for DistanceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for i in 0..self.n {
            list.entry(&self.row(i));
        }
        list.finish()
    }
}

/// The base metrics available for feature vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Cosine,
    /// Feature vectors are read as interleaved `x0, y0, x1, y1, ...` pen
    /// trajectories.
    Stroke,
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(MetricKind::Euclidean),
            "cosine" => Ok(MetricKind::Cosine),
            "stroke" => Ok(MetricKind::Stroke),
            other => Err(Error::invalid(format!("unknown metric '{other}'"))),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Cosine => "cosine",
            MetricKind::Stroke => "stroke",
        })
    }
}

impl MetricKind {
    pub fn distance(self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            MetricKind::Euclidean => euclidean_distance(x, y),
            MetricKind::Cosine => cosine_distance(x, y),
            MetricKind::Stroke => {
                let s = StrokeTrajectory::from_interleaved(x)?;
                let t = StrokeTrajectory::from_interleaved(y)?;
                Ok(stroke_distance(&s, &t))
            }
        }
    }
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Euclidean distance `sqrt(sum (x_i - y_i)^2)`.
pub fn euclidean_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y)?;
    Ok(x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Cosine distance `1 - x.y / (|x| |y|)`, in `[0, 2]`.
pub fn cosine_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y)?;
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::invalid("cosine distance of a zero-norm vector"));
    }
    if x == y {
        return Ok(0.0);
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok((1.0 - dot / (nx * ny)).clamp(0.0, 2.0))
}

/// An ordered pen trajectory of `(x, y)` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct StrokeTrajectory {
    points: Vec<(f64, f64)>,
}

impl StrokeTrajectory {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("empty stroke trajectory"));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::invalid(
                "stroke trajectory has non-finite coordinates",
            ));
        }
        Ok(StrokeTrajectory { points })
    }

    /// Reads `[x0, y0, x1, y1, ...]`.
    pub fn from_interleaved(coords: &[f64]) -> Result<Self> {
        if !coords.len().is_multiple_of(2) {
            return Err(Error::invalid("stroke features must have even length"));
        }
        StrokeTrajectory::new(coords.chunks_exact(2).map(|c| (c[0], c[1])).collect())
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    fn nearest(&self, p: (f64, f64)) -> f64 {
        self.points
            .iter()
            .map(|q| (p.0 - q.0).hypot(p.1 - q.1))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Average distance from a point on either trajectory to the nearest point
/// on the other one, normalised by `T + T'`.
pub fn stroke_distance(s: &StrokeTrajectory, t: &StrokeTrajectory) -> f64 {
    let forward: f64 = s.points.iter().map(|&p| t.nearest(p)).sum();
    let backward: f64 = t.points.iter().map(|&p| s.nearest(p)).sum();
    // Summing the two directions in a fixed order keeps the result symmetric.
    let (a, b) = if forward <= backward {
        (forward, backward)
    } else {
        (backward, forward)
    };
    (a + b) / (s.points.len() + t.points.len()) as f64
}

/// Evaluates `metric` on every pair of feature vectors.
pub fn pairwise_matrix(features: &[Vec<f64>], metric: MetricKind) -> Result<DistanceMatrix> {
    DistanceMatrix::from_fn(features.len(), |i, j| {
        metric.distance(&features[i], &features[j])
    })
}

/// `(1 - beta) * dist0[i, j] + beta * dist1[i, j]`.
#[inline]
pub fn interpolated_distance(
    dist0: &DistanceMatrix,
    dist1: &DistanceMatrix,
    beta: f64,
    i: usize,
    j: usize,
) -> f64 {
    lerp(dist0.get(i, j), dist1.get(i, j), beta)
}

/// The single place where a pair of base values is mixed by a parameter.
/// The sweep and the fixed-parameter runner both go through here so their
/// comparisons agree bit for bit.
#[inline]
pub(crate) fn lerp(v0: f64, v1: f64, t: f64) -> f64 {
    (1.0 - t) * v0 + t * v1
}

/// Builds the full matrix `d_beta`.
pub fn interpolated_matrix(
    dist0: &DistanceMatrix,
    dist1: &DistanceMatrix,
    beta: f64,
) -> Result<DistanceMatrix> {
    if dist0.len() != dist1.len() {
        return Err(Error::invalid("distance matrices differ in size"));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid(format!("beta = {beta} outside [0, 1]")));
    }
    DistanceMatrix::from_fn(dist0.len(), |i, j| {
        Ok(interpolated_distance(dist0, dist1, beta, i, j))
    })
}
