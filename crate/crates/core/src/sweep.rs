//! Sweep-line discovery of every merge a family can make from one cluster
//! configuration, with the exact parameter subinterval for each.
//!
//! Under the merge family every cluster pair's distance is a line in the
//! parameter. Starting at the left end of the interval, the sweep finds the
//! lowest line, advances to the first point where another line drops below
//! it, and repeats. Under the metric family a pair's complete-linkage
//! distance is the upper envelope of its point-pair lines; the sweep tracks
//! the winner's farthest point pair and the first parameter at which either
//! that pair stops being farthest or another cluster pair's envelope drops
//! below it.
//!
//! Crossings at most [`SWEEP_EPS`] to the right of the current position are
//! treated as already passed. This guarantees progress and sets the
//! resolution limit: intervals narrower than `SWEEP_EPS` may be absorbed by a
//! neighbour.

use crate::error::{Error, Result};
use crate::linkage::{
    grid_point, merge_distance, tie_key, Cluster, MergeFunctionKind, MergeTable, ENVELOPE_GRID,
};
use crate::metric::{lerp, DistanceMatrix};
use crate::piecewise::ParameterInterval;

/// Crossing guard of the sweep.
pub const SWEEP_EPS: f64 = 1e-12;

/// One possible next merge and the parameters that select it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MergeEvent {
    /// Indices of the merged clusters, smaller first.
    pub pair: (usize, usize),
    pub interval: ParameterInterval,
}

/// Parameter at which two linear merge distances are equal, given
/// `delta_p = D_p(winner) - D_p(challenger)`. `None` for parallel lines.
pub fn critical_alpha(delta0: f64, delta1: f64) -> Option<f64> {
    if delta0 == delta1 {
        None
    } else {
        Some(delta0 / (delta0 - delta1))
    }
}

/// `t -> (1 - t) v0 + t v1`, tagged with the pair it measures and that
/// pair's tie-break key.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Line {
    pub pair: (usize, usize),
    pub key: (usize, usize),
    pub v0: f64,
    pub v1: f64,
}

impl Line {
    #[inline]
    fn at(&self, t: f64) -> f64 {
        lerp(self.v0, self.v1, t)
    }

    #[inline]
    fn slope(&self) -> f64 {
        self.v1 - self.v0
    }

    #[inline]
    fn crossing(&self, other: &Line) -> Option<f64> {
        critical_alpha(self.v0 - other.v0, self.v1 - other.v1)
    }
}

/// Whether `a` lies strictly below `b` immediately to the right of `t`.
/// Lines that cross no later than `t + SWEEP_EPS` are ordered by slope.
#[inline]
fn below_right(a: &Line, b: &Line, t: f64) -> bool {
    if a.slope() != b.slope() {
        if let Some(x) = a.crossing(b) {
            if x <= t + SWEEP_EPS {
                return a.slope() < b.slope();
            }
        }
    }
    a.at(t) < b.at(t)
}

/// Lowest line just right of `t`, exact ties to the smaller key.
fn argmin_right(lines: &[Line], t: f64) -> usize {
    let mut w = 0;
    for i in 1..lines.len() {
        let (l, cur) = (&lines[i], &lines[w]);
        if below_right(l, cur, t) || (!below_right(cur, l, t) && l.key < cur.key) {
            w = i;
        }
    }
    // A flatter line crossing within the guard wins to the right of `t`;
    // slopes strictly decrease so this terminates.
    loop {
        let cur = lines[w];
        let flatter = lines.iter().position(|l| {
            l.slope() < cur.slope() && cur.crossing(l).is_some_and(|x| x <= t + SWEEP_EPS)
        });
        match flatter {
            Some(i) => w = i,
            None => return w,
        }
    }
}

fn push_event(events: &mut Vec<MergeEvent>, pair: (usize, usize), lo: f64, hi: f64) {
    if let Some(last) = events.last_mut() {
        if last.pair == pair && last.interval.hi == lo {
            last.interval.hi = hi;
            return;
        }
    }
    events.push(MergeEvent {
        pair,
        interval: ParameterInterval { lo, hi },
    });
}

/// Sweeps a set of lines over `interval`. `work` counts line evaluations.
pub(crate) fn sweep_lines(
    lines: &[Line],
    interval: ParameterInterval,
    work: &mut u64,
) -> Vec<MergeEvent> {
    debug_assert!(!lines.is_empty());
    let mut events = Vec::new();
    let mut pos = interval.lo;
    loop {
        let w = lines[argmin_right(lines, pos)];
        let mut next = interval.hi;
        for l in lines {
            if l.slope() < w.slope() {
                if let Some(x) = w.crossing(l) {
                    if x > pos + SWEEP_EPS && x < next {
                        next = x;
                    }
                }
            }
        }
        *work += 2 * lines.len() as u64;
        push_event(&mut events, w.pair, pos, next);
        if next >= interval.hi {
            return events;
        }
        pos = next;
    }
}

/// Reusable buffers for [`candidate_lines`].
#[derive(Default, Debug)]
pub(crate) struct CandidateScratch {
    pub lines: Vec<Line>,
    bound: Vec<f64>,
    order: Vec<usize>,
    marked: Vec<bool>,
    active: Vec<usize>,
}

/// Lines of the active pairs of `table` that can be lowest somewhere in
/// `interval`.
///
/// With `U` the smallest larger-endpoint value of any line, a line whose
/// smaller endpoint value exceeds `U` never reaches the lower envelope. The
/// table's per-slot envelope bounds (concave, so bounded below by their
/// grid chords) rule out whole rows; only the remaining rows are scanned,
/// and scanning a row tightens its bounds near the interval.
pub(crate) fn candidate_lines(
    table: &mut MergeTable,
    interval: ParameterInterval,
    work: &mut u64,
    scratch: &mut CandidateScratch,
) {
    let CandidateScratch {
        lines,
        bound,
        order,
        marked,
        active,
    } = scratch;
    lines.clear();
    let (lo, hi) = (interval.lo, interval.hi);
    let ends = |v0: f64, v1: f64| {
        let (a, b) = (lerp(v0, v1, lo), lerp(v0, v1, hi));
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    };
    let cell = |t: f64| ((t * ENVELOPE_GRID as f64) as usize).min(ENVELOPE_GRID - 1);
    let (k0, k1) = (cell(lo), cell(hi));
    let probes = [k0, k0 + 1, k1, k1 + 1];

    active.clear();
    active.extend_from_slice(table.active());
    let active = &*active;
    let chord = |table: &MergeTable, i: usize, t: f64, k: usize| {
        let (a, b) = (table.envelope(i, k), table.envelope(i, k + 1));
        if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let w = ((t - grid_point(k)) * ENVELOPE_GRID as f64).clamp(0.0, 1.0);
        lerp(a, b, w)
    };
    let slack = |u: f64| u + 1e-9 * (1.0 + u.abs());
    bound.clear();
    for &i in active {
        let mut b = chord(table, i, lo, k0).min(chord(table, i, hi, k1));
        for g in k0 + 1..=k1 {
            b = b.min(table.envelope(i, g));
        }
        bound.push(b);
    }
    // Rows in increasing bound order until the bound passes the best
    // larger endpoint seen so far. Upper only decreases, so rows above the
    // cut after the first scan never need ordering.
    let mut upper = f64::INFINITY;
    marked.clear();
    marked.resize(table.num_slots(), false);
    let mut scan = |table: &mut MergeTable, i: usize, upper: &mut f64| {
        scan_row(table, active, i, &probes, |j, v0, v1| {
            if marked[j] {
                return;
            }
            let (low, high) = ends(v0, v1);
            if low <= slack(*upper) {
                *upper = upper.min(high);
                let (a, b) = (i.min(j), i.max(j));
                lines.push(Line {
                    pair: (a, b),
                    key: (a, b),
                    v0,
                    v1,
                });
            }
        });
        marked[i] = true;
    };
    let first = (0..active.len())
        .min_by(|&x, &y| bound[x].total_cmp(&bound[y]))
        .expect("at least two active slots");
    scan(table, active[first], &mut upper);
    order.clear();
    order.extend((0..active.len()).filter(|&x| x != first && bound[x] <= slack(upper)));
    order.sort_unstable_by(|&x, &y| bound[x].total_cmp(&bound[y]));
    let mut scanned = 1;
    for &x in order.iter() {
        if bound[x] > slack(upper) {
            break;
        }
        scanned += 1;
        scan(table, active[x], &mut upper);
    }
    *work += (active.len() + scanned * (active.len() - 1)) as u64;
    let cut = slack(upper);
    lines.retain(|l| ends(l.v0, l.v1).0 <= cut);
}

/// Visits every line through slot `i` and tightens the slot's envelope
/// bounds at the grid points `probes`.
fn scan_row<F: FnMut(usize, f64, f64)>(
    table: &mut MergeTable,
    active: &[usize],
    i: usize,
    probes: &[usize; 4],
    mut visit: F,
) {
    let at = probes.map(grid_point);
    let mut low = [f64::INFINITY; 4];
    let row = table.row(i);
    for &j in active {
        if j == i {
            continue;
        }
        let (v0, v1) = row[j];
        for k in 0..4 {
            low[k] = low[k].min(lerp(v0, v1, at[k]));
        }
        visit(j, v0, v1);
    }
    for k in 0..4 {
        table.tighten_envelope(i, probes[k], low[k]);
    }
}

fn check_clusters(clusters: &[Cluster], n: usize) -> Result<()> {
    if clusters.len() < 2 {
        return Err(Error::invalid("need at least two clusters"));
    }
    let mut seen = vec![false; n];
    for c in clusters {
        for &p in c.members() {
            if p >= n {
                return Err(Error::invalid(format!(
                    "point {p} outside the distance matrix"
                )));
            }
            if seen[p] {
                return Err(Error::invalid(format!("point {p} belongs to two clusters")));
            }
            seen[p] = true;
        }
    }
    Ok(())
}

/// All merges chosen by `D_alpha = (1 - alpha) D0 + alpha D1` for
/// `alpha` in `interval`. Pairs index into `clusters`.
pub fn find_merges_alpha(
    clusters: &[Cluster],
    d0: MergeFunctionKind,
    d1: MergeFunctionKind,
    dist: &DistanceMatrix,
    interval: ParameterInterval,
) -> Result<Vec<MergeEvent>> {
    check_clusters(clusters, dist.len())?;
    let mut lines = Vec::new();
    for a in 0..clusters.len() {
        for b in (a + 1)..clusters.len() {
            lines.push(Line {
                pair: (a, b),
                key: tie_key(&clusters[a], &clusters[b]),
                v0: merge_distance(d0, &clusters[a], &clusters[b], dist)?,
                v1: merge_distance(d1, &clusters[a], &clusters[b], dist)?,
            });
        }
    }
    let mut work = 0;
    Ok(sweep_lines(&lines, interval, &mut work))
}

/// Per cluster pair, point-pair lines `(d0, d1)` whose maximum on `[0, 1]`
/// equals the pair's complete-linkage distance under `d_beta`, and a lower
/// bound on that distance. Indexed by cluster key (smallest member).
/// Merges are journaled and undone in LIFO order.
#[derive(Debug, Default)]
#[allow(clippy::type_complexity)]
pub(crate) struct PairLines {
    n: usize,
    lines: Vec<Vec<(f64, f64)>>,
    floor: Vec<f64>,
    // (index, replaced lines, replaced floor)
    saved: Vec<(usize, Vec<(f64, f64)>, f64)>,
    spare: Vec<Vec<(f64, f64)>>,
    work: u64,
}

impl PairLines {
    /// Lines between the groups of `owner` (cluster key per point,
    /// `usize::MAX` for points that take no part).
    pub fn new(dist0: &DistanceMatrix, dist1: &DistanceMatrix, owner: &[usize]) -> Self {
        let n = owner.len();
        let mut lines = vec![Vec::new(); n * n];
        for p in 0..n {
            let (r0, r1) = (dist0.row(p), dist1.row(p));
            for q in (p + 1)..n {
                let (a, b) = (owner[p], owner[q]);
                if a == usize::MAX || b == usize::MAX || a == b {
                    continue;
                }
                lines[a.min(b) * n + a.max(b)].push((r0[q], r1[q]));
            }
        }
        let floor = lines.iter_mut().map(upper_lines).collect();
        PairLines {
            n,
            lines,
            floor,
            ..Default::default()
        }
    }

    #[inline]
    fn index(&self, a: usize, b: usize) -> usize {
        a.min(b) * self.n + a.max(b)
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> &[(f64, f64)] {
        &self.lines[self.index(a, b)]
    }

    #[inline]
    pub fn floor(&self, a: usize, b: usize) -> f64 {
        self.floor[self.index(a, b)]
    }

    /// Lines combined by merges so far.
    pub fn work(&self) -> u64 {
        self.work
    }

    /// Folds cluster `gone` into `keep` against every other key in `keys`.
    /// Returns the journal mark for [`PairLines::undo`].
    pub fn merge(&mut self, keep: usize, gone: usize, keys: &[usize]) -> usize {
        let mark = self.saved.len();
        for &c in keys {
            if c == keep || c == gone {
                continue;
            }
            let mut merged = self.spare.pop().unwrap_or_default();
            merged.clear();
            merged.extend_from_slice(self.get(keep, c));
            merged.extend_from_slice(self.get(gone, c));
            self.work += merged.len() as u64;
            let floor = upper_lines(&mut merged);
            let i = self.index(keep, c);
            let old = std::mem::replace(&mut self.lines[i], merged);
            let old_floor = std::mem::replace(&mut self.floor[i], floor);
            self.saved.push((i, old, old_floor));
        }
        mark
    }

    pub fn undo(&mut self, mark: usize) {
        while self.saved.len() > mark {
            let (i, old, old_floor) = self.saved.pop().expect("journal entry");
            self.floor[i] = old_floor;
            let cur = std::mem::replace(&mut self.lines[i], old);
            self.spare.push(cur);
        }
    }
}

/// Keeps only lines that can be the maximum somewhere on `[0, 1]` and
/// returns a lower bound on that maximum over `[0, 1]`. A line is dropped
/// only when provably below the others, so the maximum is exact.
fn upper_lines(v: &mut Vec<(f64, f64)>) -> f64 {
    if v.is_empty() {
        return f64::INFINITY;
    }
    v.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let mut kept = 0;
    let mut best1 = f64::NEG_INFINITY;
    for i in 0..v.len() {
        let c = v[i];
        // Some earlier line is at least as high at both ends.
        if c.1 <= best1 {
            continue;
        }
        best1 = c.1;
        // Kept lines have v0 falling and v1 rising; drop a middle line that
        // stays under its neighbours where they cross.
        while kept >= 2 {
            let (a, b) = (v[kept - 2], v[kept - 1]);
            let t = (a.0 - c.0) / ((a.0 - c.0) + (c.1 - a.1));
            let top = lerp(a.0, a.1, t).min(lerp(c.0, c.1, t));
            if lerp(b.0, b.1, t) < top - 1e-12 * (1.0 + top.abs()) {
                kept -= 1;
            } else {
                break;
            }
        }
        v[kept] = c;
        kept += 1;
    }
    v.truncate(kept);
    // Any two lines bound the maximum from below by the least value of
    // their own maximum, taken at 0, at 1 or where they cross.
    let mut floor = v
        .iter()
        .map(|l| l.0.min(l.1))
        .fold(f64::NEG_INFINITY, f64::max);
    for w in v.windows(2) {
        let (a, c) = (w[0], w[1]);
        let t = (a.0 - c.0) / ((a.0 - c.0) + (c.1 - a.1));
        let cross = lerp(a.0, a.1, t).min(lerp(c.0, c.1, t));
        floor = floor.max(cross.min(a.0.max(c.0)).min(a.1.max(c.1)));
    }
    floor - 1e-12 * (1.0 + floor.abs())
}

/// Metric-family sweep over the clusters `keys` (increasing). Event pairs
/// are cluster keys.
pub(crate) fn sweep_metric(
    pairs: &PairLines,
    keys: &[usize],
    interval: ParameterInterval,
    scratch: &mut Vec<Line>,
    work: &mut u64,
) -> Vec<MergeEvent> {
    debug_assert!(keys.len() >= 2);
    let line = |&(v0, v1): &(f64, f64)| Line {
        pair: (0, 0),
        key: (0, 0),
        v0,
        v1,
    };
    let slack = |u: f64| u + 1e-9 * (1.0 + u.abs());
    let mut events = Vec::new();
    let mut pos = interval.lo;
    loop {
        // Farthest point pair, just right of `pos`, of every cluster pair
        // whose floor does not rule it out.
        scratch.clear();
        let mut best = f64::INFINITY;
        for (x, &a) in keys.iter().enumerate() {
            for &b in &keys[x + 1..] {
                if pairs.floor(a, b) > slack(best) {
                    continue;
                }
                let ls = pairs.get(a, b);
                *work += ls.len() as u64;
                let mut far = line(&ls[0]);
                for l in &ls[1..] {
                    let l = line(l);
                    if below_right(&far, &l, pos) {
                        far = l;
                    }
                }
                far.pair = (a, b);
                far.key = (a, b);
                best = best.min(far.at(pos));
                scratch.push(far);
            }
        }
        let winner = scratch[argmin_right(scratch, pos)];

        // First parameter past `pos` where the winner's farthest pair
        // changes or another pair's envelope falls below the winner line.
        let mut next = interval.hi;
        let reach = slack(winner.at(pos).max(winner.at(interval.hi)));
        for (x, &a) in keys.iter().enumerate() {
            for &b in &keys[x + 1..] {
                if (a, b) != winner.pair && pairs.floor(a, b) > reach {
                    continue;
                }
                let ls = pairs.get(a, b);
                *work += ls.len() as u64;
                if (a, b) == winner.pair {
                    for l in ls.iter().map(line) {
                        if l.slope() > winner.slope() {
                            if let Some(x) = winner.crossing(&l) {
                                if x > pos + SWEEP_EPS && x < next {
                                    next = x;
                                }
                            }
                        }
                    }
                    continue;
                }
                // Covered on (-inf, drop] and [rise, inf).
                let mut drop = f64::NEG_INFINITY;
                let mut rise = f64::INFINITY;
                for l in ls.iter().map(line) {
                    match winner.crossing(&l) {
                        None => {
                            if l.v0 >= winner.v0 {
                                drop = f64::INFINITY;
                            }
                        }
                        Some(x) if l.slope() < winner.slope() => drop = drop.max(x),
                        Some(x) => rise = rise.min(x),
                    }
                }
                if rise > drop && drop > pos + SWEEP_EPS && drop < next {
                    next = drop;
                }
            }
        }
        push_event(&mut events, winner.pair, pos, next);
        if next >= interval.hi {
            return events;
        }
        pos = next;
    }
}

/// All merges chosen by complete linkage under
/// `d_beta = (1 - beta) dist0 + beta dist1` for `beta` in `interval`.
/// Pairs index into `clusters`.
pub fn find_merges_beta(
    clusters: &[Cluster],
    dist0: &DistanceMatrix,
    dist1: &DistanceMatrix,
    interval: ParameterInterval,
) -> Result<Vec<MergeEvent>> {
    if dist0.len() != dist1.len() {
        return Err(Error::invalid("distance matrices differ in size"));
    }
    check_clusters(clusters, dist0.len())?;
    let mut owner = vec![usize::MAX; dist0.len()];
    let mut keys = Vec::with_capacity(clusters.len());
    let mut index_of = vec![usize::MAX; dist0.len()];
    for (i, c) in clusters.iter().enumerate() {
        for &p in c.members() {
            owner[p] = c.min_member();
        }
        keys.push(c.min_member());
        index_of[c.min_member()] = i;
    }
    keys.sort_unstable();
    let pairs = PairLines::new(dist0, dist1, &owner);
    let mut work = 0;
    let events = sweep_metric(&pairs, &keys, interval, &mut Vec::new(), &mut work);
    Ok(events
        .into_iter()
        .map(|e| {
            let (a, b) = (index_of[e.pair.0], index_of[e.pair.1]);
            MergeEvent {
                pair: (a.min(b), a.max(b)),
                interval: e.interval,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::pairwise_matrix;
    use crate::metric::MetricKind;

    fn singletons(n: usize) -> Vec<Cluster> {
        (0..n).map(Cluster::singleton).collect()
    }

    #[test]
    fn critical_alpha_examples() {
        assert_eq!(critical_alpha(-2.0, 2.0), Some(0.5));
        assert_eq!(critical_alpha(3.0, 3.0), None);
        assert_eq!(critical_alpha(-3.0, 1.0), Some(0.75));
    }

    /// Three clusters whose D0 distances are (1, 3, 4) and D1 distances are
    /// (5, 3, 0) for pairs (C1C2, C1C3, C2C3).
    fn three_lines() -> Vec<Line> {
        vec![
            Line {
                pair: (0, 1),
                key: (0, 1),
                v0: 1.0,
                v1: 5.0,
            },
            Line {
                pair: (0, 2),
                key: (0, 2),
                v0: 3.0,
                v1: 3.0,
            },
            Line {
                pair: (1, 2),
                key: (1, 2),
                v0: 4.0,
                v1: 0.0,
            },
        ]
    }

    #[test]
    fn three_cluster_sweep() {
        let mut work = 0;
        let ev = sweep_lines(&three_lines(), ParameterInterval::UNIT, &mut work);
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0].pair, (0, 1));
        assert_eq!(ev[0].interval, ParameterInterval { lo: 0.0, hi: 0.375 });
        assert_eq!(ev[1].pair, (1, 2));
        assert_eq!(ev[1].interval, ParameterInterval { lo: 0.375, hi: 1.0 });

        // Grid oracle: argmin on 10,001 points.
        let lines = three_lines();
        for g in 0..=10_000 {
            let t = g as f64 / 10_000.0;
            let best = lines
                .iter()
                .min_by(|a, b| a.at(t).total_cmp(&b.at(t)).then(a.key.cmp(&b.key)))
                .unwrap();
            if (t - 0.375).abs() > 1e-9 && t < 1.0 {
                let e = ev.iter().find(|e| e.interval.contains(t)).unwrap();
                assert_eq!(e.pair, best.pair, "t = {t}");
            }
        }
    }

    #[test]
    fn sweep_starting_on_a_crossing_takes_the_right_limit() {
        let mut work = 0;
        let iv = ParameterInterval { lo: 0.375, hi: 1.0 };
        let ev = sweep_lines(&three_lines(), iv, &mut work);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].pair, (1, 2));
    }

    #[test]
    fn two_clusters_one_event() {
        let d = pairwise_matrix(&[vec![0.0], vec![1.0], vec![5.0]], MetricKind::Euclidean).unwrap();
        let cl = vec![Cluster::new(vec![0, 1], 3).unwrap(), Cluster::singleton(2)];
        let iv = ParameterInterval::new(0.2, 0.7).unwrap();
        let ev = find_merges_alpha(
            &cl,
            MergeFunctionKind::Single,
            MergeFunctionKind::Complete,
            &d,
            iv,
        )
        .unwrap();
        assert_eq!(
            ev,
            vec![MergeEvent {
                pair: (0, 1),
                interval: iv
            }]
        );
        let ev = find_merges_beta(&cl[..], &d, &d, iv).unwrap();
        assert_eq!(
            ev,
            vec![MergeEvent {
                pair: (0, 1),
                interval: iv
            }]
        );
    }

    #[test]
    fn identical_base_functions_never_switch() {
        let f: Vec<Vec<f64>> = (0..6)
            .map(|i| vec![(i * i) as f64 * 0.3, i as f64])
            .collect();
        let d = pairwise_matrix(&f, MetricKind::Euclidean).unwrap();
        let cl = vec![
            Cluster::new(vec![0, 3], 6).unwrap(),
            Cluster::new(vec![1], 1).unwrap(),
            Cluster::new(vec![2, 4, 5], 7).unwrap(),
        ];
        let ev = find_merges_alpha(
            &cl,
            MergeFunctionKind::Complete,
            MergeFunctionKind::Complete,
            &d,
            ParameterInterval::UNIT,
        )
        .unwrap();
        assert_eq!(ev.len(), 1);
        let ev = find_merges_beta(&cl, &d, &d, ParameterInterval::UNIT).unwrap();
        assert_eq!(ev.len(), 1);
    }

    #[test]
    fn metric_flip_of_closest_pair() {
        // d0(a,b)=1, d0(c,d)=2; d1(a,b)=2, d1(c,d)=1; everything else 10.
        let mk = |ab: f64, cd: f64| {
            DistanceMatrix::from_fn(4, |i, j| {
                Ok(match (i, j) {
                    (0, 1) => ab,
                    (2, 3) => cd,
                    _ => 10.0,
                })
            })
            .unwrap()
        };
        let (d0, d1) = (mk(1.0, 2.0), mk(2.0, 1.0));
        let ev = find_merges_beta(&singletons(4), &d0, &d1, ParameterInterval::UNIT).unwrap();
        assert_eq!(
            ev,
            vec![
                MergeEvent {
                    pair: (0, 1),
                    interval: ParameterInterval { lo: 0.0, hi: 0.5 }
                },
                MergeEvent {
                    pair: (2, 3),
                    interval: ParameterInterval { lo: 0.5, hi: 1.0 }
                },
            ]
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = pairwise_matrix(&[vec![0.0], vec![1.0]], MetricKind::Euclidean).unwrap();
        let one = vec![Cluster::new(vec![0, 1], 2).unwrap()];
        let s = MergeFunctionKind::Single;
        assert!(find_merges_alpha(&one, s, s, &d, ParameterInterval::UNIT).is_err());
        let overlap = vec![Cluster::singleton(0), Cluster::new(vec![0, 1], 2).unwrap()];
        assert!(find_merges_alpha(&overlap, s, s, &d, ParameterInterval::UNIT).is_err());
        assert!(find_merges_beta(&overlap, &d, &d, ParameterInterval::UNIT).is_err());
    }

    #[test]
    fn upper_lines_keep_the_maximum_and_bound_it() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let len = rng.random_range(1..12);
            let all: Vec<(f64, f64)> = (0..len)
                .map(|_| (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)))
                .collect();
            let mut kept = all.clone();
            let floor = upper_lines(&mut kept);
            assert!(!kept.is_empty() && kept.len() <= all.len());
            let max_of = |ls: &[(f64, f64)], t: f64| {
                ls.iter()
                    .map(|l| (1.0 - t) * l.0 + t * l.1)
                    .fold(f64::MIN, f64::max)
            };
            let mut lowest = f64::INFINITY;
            for g in 0..=1000 {
                let t = g as f64 / 1000.0;
                let m = max_of(&all, t);
                assert!((max_of(&kept, t) - m).abs() <= 1e-12, "{all:?} at {t}");
                lowest = lowest.min(m);
            }
            assert!(floor <= lowest);
        }
    }

    #[test]
    fn pair_lines_merge_and_undo() {
        let pts: Vec<Vec<f64>> = [0.0, 1.0, 3.0, 7.0].iter().map(|&x| vec![x]).collect();
        let alt: Vec<Vec<f64>> = [5.0, 0.0, 2.0, 2.5].iter().map(|&x| vec![x]).collect();
        let d0 = pairwise_matrix(&pts, MetricKind::Euclidean).unwrap();
        let d1 = pairwise_matrix(&alt, MetricKind::Euclidean).unwrap();
        let keys: Vec<usize> = (0..4).collect();
        let mut pairs = PairLines::new(&d0, &d1, &keys);
        let before = pairs.lines.clone();
        let mark = pairs.merge(0, 1, &keys);
        // {0, 1} against 2 is the larger point distance at each end.
        let at = |t: f64, ls: &[(f64, f64)]| {
            ls.iter()
                .map(|l| lerp(l.0, l.1, t))
                .fold(f64::MIN, f64::max)
        };
        assert_eq!(at(0.0, pairs.get(0, 2)), 3.0);
        assert_eq!(at(1.0, pairs.get(0, 2)), 3.0);
        assert!(pairs.floor(0, 2) <= at(0.5, pairs.get(0, 2)));
        pairs.undo(mark);
        assert_eq!(pairs.lines, before);
        assert_eq!(pairs.get(0, 2), &[(3.0, 3.0)]);
    }
}
