//! Clustering instances and their text file format.
//!
//! ```text
//! n=<int> k=<int> d=<int|0>
//! <id>,<label>[,f1,...,fd]          (n lines)
//! MATRIX0                           (optional)
//! <n comma-separated reals>         (n lines)
//! MATRIX1                           (optional)
//! <n comma-separated reals>         (n lines)
//! ```
//!
//! Reals are written in Rust's shortest round-trip decimal form.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metric::{pairwise_matrix, DistanceMatrix, MetricKind};

/// Selects one of the two base matrices of an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MatrixSlot {
    Zero,
    One,
}

impl MatrixSlot {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            0 => Ok(MatrixSlot::Zero),
            1 => Ok(MatrixSlot::One),
            _ => Err(Error::invalid(format!("matrix index {i} is not 0 or 1"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            MatrixSlot::Zero => 0,
            MatrixSlot::One => 1,
        }
    }
}

/// A labelled point set with up to two precomputed base distance matrices.
///
/// Labels are opaque strings; internally they are dense indices `0..k` in
/// order of first appearance.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringInstance {
    point_ids: Vec<String>,
    features: Option<Vec<Vec<f64>>>,
    labels: Vec<usize>,
    label_names: Vec<String>,
    dist0: Option<DistanceMatrix>,
    dist1: Option<DistanceMatrix>,
}

impl ClusteringInstance {
    /// Creates an instance. At least one of `features` and `dist0`/`dist1`
    /// must be supplied.
    pub fn new<S: AsRef<str>>(
        point_ids: Vec<String>,
        labels: &[S],
        features: Option<Vec<Vec<f64>>>,
        dist0: Option<DistanceMatrix>,
        dist1: Option<DistanceMatrix>,
    ) -> Result<Self> {
        let n = point_ids.len();
        if n < 2 {
            return Err(Error::invalid(format!(
                "an instance needs at least 2 points, got {n}"
            )));
        }
        if labels.len() != n {
            return Err(Error::invalid(format!(
                "{} labels for {n} points",
                labels.len()
            )));
        }
        let mut label_names: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let dense = labels
            .iter()
            .map(|l| {
                let l = l.as_ref();
                *index.entry(l.to_string()).or_insert_with(|| {
                    label_names.push(l.to_string());
                    label_names.len() - 1
                })
            })
            .collect();

        if let Some(f) = &features {
            if f.len() != n {
                return Err(Error::invalid(format!(
                    "{} feature vectors for {n} points",
                    f.len()
                )));
            }
            let d = f[0].len();
            if f.iter().any(|v| v.len() != d) {
                return Err(Error::invalid("feature vectors have differing dimensions"));
            }
            if f.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::invalid("non-finite feature value"));
            }
        }
        for m in [&dist0, &dist1].into_iter().flatten() {
            if m.len() != n {
                return Err(Error::invalid(format!(
                    "distance matrix is {0}x{0} but the instance has {n} points",
                    m.len()
                )));
            }
        }
        if features.is_none() && dist0.is_none() && dist1.is_none() {
            return Err(Error::invalid(
                "instance has neither features nor distance matrices",
            ));
        }
        Ok(ClusteringInstance {
            point_ids,
            features,
            labels: dense,
            label_names,
            dist0,
            dist1,
        })
    }

    /// Convenience constructor with ids `p0..p{n-1}` and feature vectors only.
    pub fn from_features<S: AsRef<str>>(features: Vec<Vec<f64>>, labels: &[S]) -> Result<Self> {
        let ids = (0..features.len()).map(|i| format!("p{i}")).collect();
        ClusteringInstance::new(ids, labels, Some(features), None, None)
    }

    /// Convenience constructor with ids `p0..p{n-1}` and matrices only.
    pub fn from_matrices<S: AsRef<str>>(
        labels: &[S],
        dist0: DistanceMatrix,
        dist1: Option<DistanceMatrix>,
    ) -> Result<Self> {
        let ids = (0..labels.len()).map(|i| format!("p{i}")).collect();
        ClusteringInstance::new(ids, labels, None, Some(dist0), dist1)
    }

    pub fn len(&self) -> usize {
        self.point_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_ids.is_empty()
    }

    /// Number of distinct target labels.
    pub fn k(&self) -> usize {
        self.label_names.len()
    }

    pub fn point_ids(&self) -> &[String] {
        &self.point_ids
    }

    pub fn features(&self) -> Option<&[Vec<f64>]> {
        self.features.as_deref()
    }

    /// Dense label index per point.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn matrix(&self, slot: MatrixSlot) -> Option<&DistanceMatrix> {
        match slot {
            MatrixSlot::Zero => self.dist0.as_ref(),
            MatrixSlot::One => self.dist1.as_ref(),
        }
    }

    pub fn dist0(&self) -> Option<&DistanceMatrix> {
        self.dist0.as_ref()
    }

    pub fn dist1(&self) -> Option<&DistanceMatrix> {
        self.dist1.as_ref()
    }

    /// Evaluates `metric` on the instance's features.
    pub fn pairwise_matrix(&self, metric: MetricKind) -> Result<DistanceMatrix> {
        let features = self
            .features
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("{metric} distance needs feature vectors")))?;
        pairwise_matrix(features, metric)
    }

    pub fn set_matrix(&mut self, slot: MatrixSlot, m: DistanceMatrix) -> Result<()> {
        if m.len() != self.len() {
            return Err(Error::invalid(
                "distance matrix size does not match instance",
            ));
        }
        match slot {
            MatrixSlot::Zero => self.dist0 = Some(m),
            MatrixSlot::One => self.dist1 = Some(m),
        }
        Ok(())
    }

    /// Fills a missing matrix slot from the features using `metric`.
    pub fn ensure_matrix(&mut self, slot: MatrixSlot, metric: MetricKind) -> Result<()> {
        if self.matrix(slot).is_none() {
            let m = self.pairwise_matrix(metric)?;
            self.set_matrix(slot, m)?;
        }
        Ok(())
    }

    /// Serializes to the instance text format.
    pub fn to_text(&self) -> String {
        let d = self.features.as_ref().map_or(0, |f| f[0].len());
        let mut out = String::new();
        writeln!(out, "n={} k={} d={}", self.len(), self.k(), d).unwrap();
        for i in 0..self.len() {
            out.push_str(&self.point_ids[i]);
            out.push(',');
            out.push_str(&self.label_names[self.labels[i]]);
            if let Some(f) = &self.features {
                for v in &f[i] {
                    write!(out, ",{v}").unwrap();
                }
            }
            out.push('\n');
        }
        for (name, m) in [("MATRIX0", &self.dist0), ("MATRIX1", &self.dist1)] {
            if let Some(m) = m {
                out.push_str(name);
                out.push('\n');
                for i in 0..m.len() {
                    let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
            }
        }
        out
    }

    /// Parses the instance text format.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
        let mut n = None;
        let mut k = None;
        let mut d = None;
        for tok in header.split_whitespace() {
            let (key, val) = tok
                .split_once('=')
                .ok_or_else(|| Error::parse(hline, format!("malformed header token '{tok}'")))?;
            let val: usize = val
                .parse()
                .map_err(|_| Error::parse(hline, format!("bad integer in '{tok}'")))?;
            match key {
                "n" => n = Some(val),
                "k" => k = Some(val),
                "d" => d = Some(val),
                _ => return Err(Error::parse(hline, format!("unknown header key '{key}'"))),
            }
        }
        let (n, k, d) = match (n, k, d) {
            (Some(n), Some(k), Some(d)) => (n, k, d),
            _ => {
                return Err(Error::parse(
                    hline,
                    "header must be 'n=<int> k=<int> d=<int>'",
                ))
            }
        };

        let mut ids = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut features = Vec::with_capacity(if d > 0 { n } else { 0 });
        for _ in 0..n {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::parse(hline, format!("expected {n} point lines")))?;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 + d {
                return Err(Error::parse(
                    ln,
                    format!("expected {} fields, found {}", 2 + d, fields.len()),
                ));
            }
            ids.push(fields[0].to_string());
            labels.push(fields[1].to_string());
            if d > 0 {
                features.push(parse_reals(ln, &fields[2..])?);
            }
        }

        let mut dist0 = None;
        let mut dist1 = None;
        while let Some((ln, marker)) = lines.next() {
            let target = match marker {
                "MATRIX0" => &mut dist0,
                "MATRIX1" => &mut dist1,
                other => return Err(Error::parse(ln, format!("unexpected line '{other}'"))),
            };
            if target.is_some() {
                return Err(Error::parse(ln, format!("duplicate {marker} section")));
            }
            let mut data = Vec::with_capacity(n * n);
            for _ in 0..n {
                let (rl, row) = lines
                    .next()
                    .ok_or_else(|| Error::parse(ln, format!("{marker} needs {n} rows")))?;
                let fields: Vec<&str> = row.split(',').map(str::trim).collect();
                if fields.len() != n {
                    return Err(Error::parse(rl, format!("expected {n} columns")));
                }
                data.extend(parse_reals(rl, &fields)?);
            }
            *target = Some(
                DistanceMatrix::from_rows(n, data).map_err(|e| Error::parse(ln, e.to_string()))?,
            );
        }

        let inst = ClusteringInstance::new(
            ids,
            &labels,
            if d > 0 { Some(features) } else { None },
            dist0,
            dist1,
        )?;
        if inst.k() != k {
            return Err(Error::parse(
                hline,
                format!("header says k={k} but {} distinct labels found", inst.k()),
            ));
        }
        Ok(inst)
    }
}

fn parse_reals(line: usize, fields: &[&str]) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| Error::parse(line, format!("'{f}' is not a real number")))
        })
        .collect()
}
