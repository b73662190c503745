//! Merge functions, their convex combination and the fixed-parameter
//! linkage algorithm.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{ClusteringInstance, MatrixSlot};
use crate::metric::{interpolated_matrix, lerp, DistanceMatrix};
use crate::tree::{ClusterTree, NodeId};

/// Cluster-to-cluster distance built from pointwise distances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeFunctionKind {
    /// Minimum pairwise distance.
    Single,
    /// Maximum pairwise distance.
    Complete,
    /// Mean pairwise distance.
    Average,
}

impl MergeFunctionKind {
    /// Single and complete linkage always return the distance of one point
    /// pair, chosen by the ordering of distances alone.
    pub fn is_two_point_based(self) -> bool {
        !matches!(self, MergeFunctionKind::Average)
    }
}

impl FromStr for MergeFunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "single" | "min" => Ok(MergeFunctionKind::Single),
            "complete" | "max" => Ok(MergeFunctionKind::Complete),
            "average" | "avg" | "mean" => Ok(MergeFunctionKind::Average),
            other => Err(Error::invalid(format!("unknown merge function '{other}'"))),
        }
    }
}

impl fmt::Display for MergeFunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MergeFunctionKind::Single => "single",
            MergeFunctionKind::Complete => "complete",
            MergeFunctionKind::Average => "average",
        })
    }
}

/// A set of points together with the tree node that represents it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    members: Vec<usize>,
    node: NodeId,
}

impl Cluster {
    /// Members are sorted; duplicates and empty sets are rejected.
    pub fn new(mut members: Vec<usize>, node: NodeId) -> Result<Self> {
        members.sort_unstable();
        if members.is_empty() {
            return Err(Error::invalid("empty cluster"));
        }
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("cluster has duplicate members"));
        }
        Ok(Cluster { members, node })
    }

    pub fn singleton(point: usize) -> Self {
        Cluster {
            members: vec![point],
            node: point,
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn min_member(&self) -> usize {
        self.members[0]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn overlaps(&self, other: &Cluster) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.members.len() && j < other.members.len() {
            match self.members[i].cmp(&other.members[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

/// Canonical tie-break key for a pair of clusters: smaller minimum member
/// first, then the other cluster's minimum member.
pub fn tie_key(a: &Cluster, b: &Cluster) -> (usize, usize) {
    let (x, y) = (a.min_member(), b.min_member());
    (x.min(y), x.max(y))
}

/// Distance between two disjoint clusters.
pub fn merge_distance(
    kind: MergeFunctionKind,
    a: &Cluster,
    b: &Cluster,
    dist: &DistanceMatrix,
) -> Result<f64> {
    if a.overlaps(b) {
        return Err(Error::invalid("merge distance of overlapping clusters"));
    }
    let pairs = a
        .members
        .iter()
        .flat_map(|&x| b.members.iter().map(move |&y| dist.get(x, y)));
    Ok(match kind {
        MergeFunctionKind::Single => pairs.fold(f64::INFINITY, f64::min),
        MergeFunctionKind::Complete => pairs.fold(f64::NEG_INFINITY, f64::max),
        MergeFunctionKind::Average => pairs.sum::<f64>() / (a.len() * b.len()) as f64,
    })
}

/// The point pair whose distance a two-point-based merge function returns.
/// `None` for average linkage.
pub fn merge_witness(
    kind: MergeFunctionKind,
    a: &Cluster,
    b: &Cluster,
    dist: &DistanceMatrix,
) -> Option<(usize, usize)> {
    let pairs = a
        .members
        .iter()
        .flat_map(|&x| b.members.iter().map(move |&y| (x, y)));
    match kind {
        MergeFunctionKind::Single => {
            pairs.min_by(|p, q| dist.get(p.0, p.1).total_cmp(&dist.get(q.0, q.1)))
        }
        MergeFunctionKind::Complete => {
            pairs.max_by(|p, q| dist.get(p.0, p.1).total_cmp(&dist.get(q.0, q.1)))
        }
        MergeFunctionKind::Average => None,
    }
}

/// `(1 - alpha) * D0(A, B) + alpha * D1(A, B)`.
pub fn alpha_merge_distance(
    alpha: f64,
    d0: MergeFunctionKind,
    d1: MergeFunctionKind,
    a: &Cluster,
    b: &Cluster,
    dist: &DistanceMatrix,
) -> Result<f64> {
    Ok(lerp(
        merge_distance(d0, a, b, dist)?,
        merge_distance(d1, a, b, dist)?,
        alpha,
    ))
}

/// A one-parameter family of linkage algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FamilySpec {
    /// Merge with `D_alpha = (1 - alpha) D0 + alpha D1` over one fixed matrix.
    Merge {
        d0: MergeFunctionKind,
        d1: MergeFunctionKind,
        #[serde(with = "slot_serde")]
        matrix: MatrixSlot,
    },
    /// Complete linkage over `d_beta = (1 - beta) dist0 + beta dist1`.
    Metric,
}

mod slot_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::instance::MatrixSlot;

    pub fn serialize<S: Serializer>(slot: &MatrixSlot, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(slot.index())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<MatrixSlot, D::Error> {
        MatrixSlot::from_index(u8::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl FamilySpec {
    pub fn merge(d0: MergeFunctionKind, d1: MergeFunctionKind) -> Self {
        FamilySpec::Merge {
            d0,
            d1,
            matrix: MatrixSlot::Zero,
        }
    }

    /// Single linkage at 0, complete linkage at 1.
    pub fn single_complete() -> Self {
        FamilySpec::merge(MergeFunctionKind::Single, MergeFunctionKind::Complete)
    }

    /// Average linkage at 0, complete linkage at 1.
    pub fn average_complete() -> Self {
        FamilySpec::merge(MergeFunctionKind::Average, MergeFunctionKind::Complete)
    }

    /// Checks that the instance carries the matrices this family reads.
    pub fn check(&self, instance: &ClusteringInstance) -> Result<()> {
        let need: &[MatrixSlot] = match self {
            FamilySpec::Merge { matrix, .. } => std::slice::from_ref(matrix),
            FamilySpec::Metric => &[MatrixSlot::Zero, MatrixSlot::One],
        };
        for &slot in need {
            if instance.matrix(slot).is_none() {
                return Err(Error::invalid(format!(
                    "family needs distance matrix {} but the instance has none",
                    slot.index()
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Merge { d0, d1, matrix } => {
                write!(f, "merge({d0}->{d1}, matrix {})", matrix.index())
            }
            FamilySpec::Metric => f.write_str("metric(complete, matrix 0->1)"),
        }
    }
}

/// Grid resolution of the per-slot envelope bounds kept by [`MergeTable`].
pub(crate) const ENVELOPE_GRID: usize = 64;

/// Incrementally maintained cluster-to-cluster distances under two merge
/// functions, for one base matrix.
///
/// Clusters live in slots; a cluster's slot is its smallest member, so slot
/// order is the canonical tie-break order. Single and complete values are
/// exact minima/maxima of member distances; average linkage keeps the sum of
/// member distances and divides on read.
///
/// For every slot the table can also keep lower bounds on the slot's
/// envelope `t -> min_j D_t(slot, j)` at the grid points `g / ENVELOPE_GRID`.
/// A merge never lowers any remaining distance below the smaller of the two
/// it replaces, so bounds stay valid as merges are applied.
#[derive(Clone, Debug)]
pub(crate) struct MergeTable {
    n: usize,
    kinds: [MergeFunctionKind; 2],
    // Symmetric, `lines[i * n + j] = (D0, D1)` between slots `i` and `j`.
    lines: Vec<(f64, f64)>,
    size: Vec<usize>,
    active: Vec<usize>,
    node: Vec<NodeId>,
    merges: Vec<(NodeId, NodeId)>,
    // `envelope[i * (ENVELOPE_GRID + 1) + g]`.
    envelope: Vec<f64>,
    // Overwritten envelope entries, reverted by `undo`.
    journal: Vec<(usize, f64)>,
    // Overwritten `(partner, line)` entries of the kept slot's row.
    saved: Vec<(usize, (f64, f64))>,
    // Distance evaluations spent inside `apply`.
    work: u64,
}

/// Everything needed to reverse one [`MergeTable::apply`].
#[derive(Debug)]
pub(crate) struct MergeUndo {
    keep: usize,
    gone: usize,
    gone_pos: usize,
    old_node: NodeId,
    saved_len: usize,
    journal_len: usize,
}

impl MergeTable {
    pub(crate) fn new(dist: &DistanceMatrix, d0: MergeFunctionKind, d1: MergeFunctionKind) -> Self {
        let n = dist.len();
        let mut lines = vec![(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = dist.get(i, j);
                lines[i * n + j] = (d, d);
                lines[j * n + i] = (d, d);
            }
        }
        MergeTable {
            n,
            kinds: [d0, d1],
            lines,
            size: vec![1; n],
            active: (0..n).collect(),
            node: (0..n).collect(),
            merges: Vec::with_capacity(n.saturating_sub(1)),
            envelope: vec![f64::NEG_INFINITY; n * (ENVELOPE_GRID + 1)],
            journal: Vec::new(),
            saved: Vec::new(),
            work: 0,
        }
    }

    /// Sets every envelope bound to its exact value.
    pub(crate) fn init_envelopes(&mut self) {
        let active = self.active.clone();
        let mut row = [f64::INFINITY; ENVELOPE_GRID + 1];
        for &i in &active {
            row.fill(f64::INFINITY);
            for &j in &active {
                if j == i {
                    continue;
                }
                let (v0, v1) = self.line(i, j);
                for (g, r) in row.iter_mut().enumerate() {
                    *r = r.min(lerp(v0, v1, grid_point(g)));
                }
            }
            let at = i * (ENVELOPE_GRID + 1);
            self.envelope[at..at + ENVELOPE_GRID + 1].copy_from_slice(&row);
        }
        self.journal.clear();
    }

    #[inline]
    pub(crate) fn active(&self) -> &[usize] {
        &self.active
    }

    pub(crate) fn num_slots(&self) -> usize {
        self.n
    }

    pub(crate) fn work(&self) -> u64 {
        self.work
    }

    /// `(D0, D1)` between slots `i` and `j`.
    #[inline]
    pub(crate) fn line(&self, i: usize, j: usize) -> (f64, f64) {
        self.lines[i * self.n + j]
    }

    /// Lines from slot `i` to every slot, indexed by partner.
    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[(f64, f64)] {
        &self.lines[i * self.n..(i + 1) * self.n]
    }

    /// Envelope bound of slot `i` at grid point `g`.
    #[inline]
    pub(crate) fn envelope(&self, i: usize, g: usize) -> f64 {
        self.envelope[i * (ENVELOPE_GRID + 1) + g]
    }

    /// Raises the envelope bound of slot `i` at grid point `g` to the exact
    /// current value `v`.
    #[inline]
    pub(crate) fn tighten_envelope(&mut self, i: usize, g: usize, v: f64) {
        let at = i * (ENVELOPE_GRID + 1) + g;
        if v > self.envelope[at] {
            self.journal.push((at, self.envelope[at]));
            self.envelope[at] = v;
        }
    }

    #[cfg(test)]
    pub(crate) fn members(&self, slot: usize) -> Vec<usize> {
        let tree_nodes = self.node[slot];
        let mut out = Vec::new();
        let mut stack = vec![tree_nodes];
        while let Some(v) = stack.pop() {
            if v < self.n {
                out.push(v);
            } else {
                let (a, b) = self.merges[v - self.n];
                stack.push(a);
                stack.push(b);
            }
        }
        out.sort_unstable();
        out
    }

    /// Argmin of `D_theta` over active pairs, ties to the lowest slot pair.
    pub(crate) fn argmin_at(&self, theta: f64) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_v = f64::INFINITY;
        for (x, &i) in self.active.iter().enumerate() {
            for &j in &self.active[x + 1..] {
                let (v0, v1) = self.line(i, j);
                let v = lerp(v0, v1, theta);
                if v < best_v {
                    best_v = v;
                    best = (i, j);
                }
            }
        }
        best
    }

    /// Merges slot `gone` into slot `keep` (`keep < gone`).
    pub(crate) fn apply(&mut self, keep: usize, gone: usize) -> MergeUndo {
        debug_assert!(keep < gone);
        let n = self.n;
        let journal_len = self.journal.len();
        let saved_len = self.saved.len();
        let (wk, wg) = (self.size[keep] as f64, self.size[gone] as f64);
        let total = wk + wg;
        let combine = |kind: MergeFunctionKind, a: f64, b: f64| match kind {
            MergeFunctionKind::Single => a.min(b),
            MergeFunctionKind::Complete => a.max(b),
            MergeFunctionKind::Average => (wk * a + wg * b) / total,
        };
        for &c in &self.active {
            if c == keep || c == gone {
                continue;
            }
            let old = self.lines[keep * n + c];
            let other = self.lines[gone * n + c];
            let merged = (
                combine(self.kinds[0], old.0, other.0),
                combine(self.kinds[1], old.1, other.1),
            );
            self.saved.push((c, old));
            self.lines[keep * n + c] = merged;
            self.lines[c * n + keep] = merged;
        }
        self.work += (self.saved.len() - saved_len) as u64;
        // The merged slot's envelope is at least the smaller of the two.
        let (k, g) = (keep * (ENVELOPE_GRID + 1), gone * (ENVELOPE_GRID + 1));
        for x in 0..=ENVELOPE_GRID {
            let lower = self.envelope[g + x];
            if lower < self.envelope[k + x] {
                self.journal.push((k + x, self.envelope[k + x]));
                self.envelope[k + x] = lower;
            }
        }
        let gone_pos = self.active.binary_search(&gone).expect("active slot");
        self.active.remove(gone_pos);
        self.size[keep] += self.size[gone];
        let old_node = self.node[keep];
        self.merges.push((old_node, self.node[gone]));
        self.node[keep] = n + self.merges.len() - 1;
        MergeUndo {
            keep,
            gone,
            gone_pos,
            old_node,
            saved_len,
            journal_len,
        }
    }

    pub(crate) fn undo(&mut self, u: MergeUndo) {
        let n = self.n;
        self.merges.pop();
        self.node[u.keep] = u.old_node;
        self.size[u.keep] -= self.size[u.gone];
        self.active.insert(u.gone_pos, u.gone);
        for (c, old) in self.saved.drain(u.saved_len..) {
            self.lines[u.keep * n + c] = old;
            self.lines[c * n + u.keep] = old;
        }
        while self.journal.len() > u.journal_len {
            let (at, v) = self.journal.pop().unwrap();
            self.envelope[at] = v;
        }
    }

    pub(crate) fn tree(&self) -> ClusterTree {
        ClusterTree::from_merges_unchecked(self.n, self.merges.clone())
    }
}

#[inline]
pub(crate) fn grid_point(g: usize) -> f64 {
    g as f64 / ENVELOPE_GRID as f64
}

/// Runs the linkage algorithm of `family` at parameter `theta`.
///
/// At every step the pair minimising the family's cluster distance is
/// merged; exact ties go to the pair with the lower smallest member, then
/// the lower other smallest member.
pub fn run_linkage(
    instance: &ClusteringInstance,
    family: &FamilySpec,
    theta: f64,
) -> Result<ClusterTree> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid(format!("parameter {theta} outside [0, 1]")));
    }
    family.check(instance)?;
    let mut table = match *family {
        FamilySpec::Merge { d0, d1, matrix } => {
            MergeTable::new(instance.matrix(matrix).unwrap(), d0, d1)
        }
        FamilySpec::Metric => {
            let d =
                interpolated_matrix(instance.dist0().unwrap(), instance.dist1().unwrap(), theta)?;
            MergeTable::new(&d, MergeFunctionKind::Complete, MergeFunctionKind::Complete)
        }
    };
    let theta_eff = match family {
        FamilySpec::Merge { .. } => theta,
        FamilySpec::Metric => 0.0,
    };
    while table.active().len() > 1 {
        let (i, j) = table.argmin_at(theta_eff);
        table.apply(i, j);
    }
    Ok(table.tree())
}

/// The pair of `clusters` (indices into the slice, smaller first) that the
/// family merges at `theta`, computed directly from member lists.
pub fn closest_pair(
    clusters: &[Cluster],
    family: &FamilySpec,
    instance: &ClusteringInstance,
    theta: f64,
) -> Result<(usize, usize)> {
    family.check(instance)?;
    if clusters.len() < 2 {
        return Err(Error::invalid("need at least two clusters"));
    }
    let metric_d;
    let (d0, d1, dist) = match *family {
        FamilySpec::Merge { d0, d1, matrix } => (d0, d1, instance.matrix(matrix).unwrap()),
        FamilySpec::Metric => {
            metric_d =
                interpolated_matrix(instance.dist0().unwrap(), instance.dist1().unwrap(), theta)?;
            (
                MergeFunctionKind::Complete,
                MergeFunctionKind::Complete,
                &metric_d,
            )
        }
    };
    // (pair, distance, tie key)
    type Best = ((usize, usize), f64, (usize, usize));
    let mut best: Option<Best> = None;
    for a in 0..clusters.len() {
        for b in (a + 1)..clusters.len() {
            let v = alpha_merge_distance(theta, d0, d1, &clusters[a], &clusters[b], dist)?;
            let key = tie_key(&clusters[a], &clusters[b]);
            let better = match best {
                None => true,
                Some((_, bv, bk)) => v < bv || (v == bv && key < bk),
            };
            if better {
                best = Some(((a, b), v, key));
            }
        }
    }
    Ok(best.unwrap().0)
}
