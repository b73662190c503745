//! Depth-first enumeration of a family's execution tree.
//!
//! The root holds all singletons and the whole parameter range. A node's
//! children are the merges found by the sweep over the node's interval, each
//! with its subinterval. After `n - 1` merges a node is a leaf: one cluster
//! tree and the parameters that produce it.
//!
//! The traversal keeps one mutable cluster configuration and an explicit
//! stack of `(events, next child, undo record)` frames. Descending applies a
//! merge; popping a frame reverts it. Leaves come out in increasing
//! parameter order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ClusteringInstance;
use crate::linkage::{Cluster, FamilySpec, MergeTable, MergeUndo};
use crate::metric::DistanceMatrix;
use crate::piecewise::{ParameterInterval, PiecewiseConstantLoss};
use crate::pruning::hamming_pruning_loss;
use crate::sweep::{
    candidate_lines, find_merges_alpha, find_merges_beta, sweep_lines, sweep_metric,
    CandidateScratch, Line, MergeEvent, PairLines,
};
use crate::tree::{ClusterTree, NodeId};

/// Counters gathered during one traversal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraversalStats {
    /// Leaves, i.e. distinct parameter intervals before coalescing.
    pub leaves: usize,
    /// Execution-tree edges (merges applied).
    pub edges: u64,
    /// Merge-distance evaluations: cluster-pair distances for the merge
    /// family, point-pair distances for the metric family.
    pub evaluations: u64,
    /// Largest number of frames on the DFS stack.
    pub peak_stack_depth: usize,
}

/// One node of the execution tree in explicit form.
#[derive(Clone, Debug, PartialEq)]
pub struct ExecutionNode {
    pub interval: ParameterInterval,
    pub clusters: Vec<Cluster>,
    /// Merges performed so far.
    pub depth: usize,
}

impl ExecutionNode {
    pub fn root(n: usize) -> Self {
        ExecutionNode {
            interval: ParameterInterval::UNIT,
            clusters: (0..n).map(Cluster::singleton).collect(),
            depth: 0,
        }
    }

    /// Children of this node in increasing interval order. New clusters get
    /// tree node id `n + depth`.
    pub fn children(
        &self,
        instance: &ClusteringInstance,
        family: &FamilySpec,
    ) -> Result<Vec<ExecutionNode>> {
        family.check(instance)?;
        if self.clusters.len() < 2 {
            return Ok(Vec::new());
        }
        let events = match *family {
            FamilySpec::Merge { d0, d1, matrix } => find_merges_alpha(
                &self.clusters,
                d0,
                d1,
                instance.matrix(matrix).unwrap(),
                self.interval,
            )?,
            FamilySpec::Metric => find_merges_beta(
                &self.clusters,
                instance.dist0().unwrap(),
                instance.dist1().unwrap(),
                self.interval,
            )?,
        };
        let node = instance.len() + self.depth;
        events
            .into_iter()
            .map(|e| {
                let (a, b) = e.pair;
                let mut members = self.clusters[a].members().to_vec();
                members.extend_from_slice(self.clusters[b].members());
                let mut clusters: Vec<Cluster> = self
                    .clusters
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != a && i != b)
                    .map(|(_, c)| c.clone())
                    .collect();
                clusters.push(Cluster::new(members, node)?);
                Ok(ExecutionNode {
                    interval: e.interval,
                    clusters,
                    depth: self.depth + 1,
                })
            })
            .collect()
    }
}

/// Mutable cluster configuration walked by the DFS. Event pairs are slot
/// keys (smallest member of each cluster), smaller first.
trait SweepState {
    type Undo;
    fn active(&self) -> usize;
    fn events(&mut self, interval: ParameterInterval, work: &mut u64) -> Vec<MergeEvent>;
    fn apply(&mut self, pair: (usize, usize)) -> Self::Undo;
    fn undo(&mut self, undo: Self::Undo);
    fn tree(&self) -> ClusterTree;
}

struct MergeState {
    table: MergeTable,
    scratch: CandidateScratch,
    // Table work already reported.
    table_work: u64,
}

impl SweepState for MergeState {
    type Undo = MergeUndo;

    fn active(&self) -> usize {
        self.table.active().len()
    }

    fn events(&mut self, interval: ParameterInterval, work: &mut u64) -> Vec<MergeEvent> {
        *work += self.table.work() - self.table_work;
        self.table_work = self.table.work();
        candidate_lines(&mut self.table, interval, work, &mut self.scratch);
        sweep_lines(&self.scratch.lines, interval, work)
    }

    fn apply(&mut self, (keep, gone): (usize, usize)) -> MergeUndo {
        self.table.apply(keep, gone)
    }

    fn undo(&mut self, undo: MergeUndo) {
        self.table.undo(undo)
    }

    fn tree(&self) -> ClusterTree {
        self.table.tree()
    }
}

struct MetricState {
    n: usize,
    pairs: PairLines,
    keys: Vec<usize>,
    node: Vec<NodeId>,
    merges: Vec<(NodeId, NodeId)>,
    scratch: Vec<Line>,
    // Pair-table work already reported.
    pair_work: u64,
}

struct MetricUndo {
    keep: usize,
    gone: usize,
    gone_pos: usize,
    mark: usize,
    old_node: NodeId,
}

impl MetricState {
    fn new(dist0: &DistanceMatrix, dist1: &DistanceMatrix) -> Self {
        let n = dist0.len();
        let keys: Vec<usize> = (0..n).collect();
        MetricState {
            n,
            pairs: PairLines::new(dist0, dist1, &keys),
            keys,
            node: (0..n).collect(),
            merges: Vec::with_capacity(n.saturating_sub(1)),
            scratch: Vec::new(),
            pair_work: 0,
        }
    }
}

impl SweepState for MetricState {
    type Undo = MetricUndo;

    fn active(&self) -> usize {
        self.keys.len()
    }

    fn events(&mut self, interval: ParameterInterval, work: &mut u64) -> Vec<MergeEvent> {
        *work += self.pairs.work() - self.pair_work;
        self.pair_work = self.pairs.work();
        sweep_metric(&self.pairs, &self.keys, interval, &mut self.scratch, work)
    }

    fn apply(&mut self, (keep, gone): (usize, usize)) -> MetricUndo {
        let mark = self.pairs.merge(keep, gone, &self.keys);
        let gone_pos = self.keys.binary_search(&gone).expect("active key");
        self.keys.remove(gone_pos);
        let old_node = self.node[keep];
        self.merges.push((old_node, self.node[gone]));
        self.node[keep] = self.n + self.merges.len() - 1;
        MetricUndo {
            keep,
            gone,
            gone_pos,
            mark,
            old_node,
        }
    }

    fn undo(&mut self, u: MetricUndo) {
        self.merges.pop();
        self.node[u.keep] = u.old_node;
        self.keys.insert(u.gone_pos, u.gone);
        self.pairs.undo(u.mark);
    }

    fn tree(&self) -> ClusterTree {
        ClusterTree::from_merges_unchecked(self.n, self.merges.clone())
    }
}

struct Frame<U> {
    events: Vec<MergeEvent>,
    next: usize,
    undo: Option<U>,
}

fn traverse<S, F>(state: &mut S, n: usize, mut on_leaf: F) -> Result<TraversalStats>
where
    S: SweepState,
    F: FnMut(ParameterInterval, &ClusterTree) -> Result<()>,
{
    let mut stats = TraversalStats::default();
    if n == 1 {
        stats.leaves = 1;
        on_leaf(ParameterInterval::UNIT, &state.tree())?;
        return Ok(stats);
    }
    let root = state.events(ParameterInterval::UNIT, &mut stats.evaluations);
    let mut stack = vec![Frame {
        events: root,
        next: 0,
        undo: None,
    }];
    stats.peak_stack_depth = 1;
    while let Some(top) = stack.last_mut() {
        if top.next == top.events.len() {
            if let Some(u) = stack.pop().and_then(|f| f.undo) {
                state.undo(u);
            }
            continue;
        }
        let ev = top.events[top.next];
        top.next += 1;
        let u = state.apply(ev.pair);
        stats.edges += 1;
        if state.active() == 1 {
            stats.leaves += 1;
            on_leaf(ev.interval, &state.tree())?;
            state.undo(u);
        } else {
            let events = state.events(ev.interval, &mut stats.evaluations);
            stack.push(Frame {
                events,
                next: 0,
                undo: Some(u),
            });
            stats.peak_stack_depth = stats.peak_stack_depth.max(stack.len());
        }
    }
    Ok(stats)
}

/// Calls `on_leaf` for every leaf in increasing parameter order.
pub fn for_each_leaf<F>(
    instance: &ClusteringInstance,
    family: &FamilySpec,
    on_leaf: F,
) -> Result<TraversalStats>
where
    F: FnMut(ParameterInterval, &ClusterTree) -> Result<()>,
{
    family.check(instance)?;
    let n = instance.len();
    if n == 0 {
        return Err(Error::invalid("empty instance"));
    }
    match *family {
        FamilySpec::Merge { d0, d1, matrix } => {
            let mut table = MergeTable::new(instance.matrix(matrix).unwrap(), d0, d1);
            table.init_envelopes();
            let mut state = MergeState {
                table,
                scratch: CandidateScratch::default(),
                table_work: 0,
            };
            traverse(&mut state, n, on_leaf)
        }
        FamilySpec::Metric => {
            let (d0, d1) = (instance.dist0().unwrap(), instance.dist1().unwrap());
            let mut state = MetricState::new(d0, d1);
            traverse(&mut state, n, on_leaf)
        }
    }
}

/// Every `(interval, tree)` leaf, in increasing interval order.
pub fn enumerate_leaves(
    instance: &ClusteringInstance,
    family: &FamilySpec,
) -> Result<Vec<(ParameterInterval, ClusterTree)>> {
    let mut out = Vec::new();
    for_each_leaf(instance, family, |iv, tree| {
        out.push((iv, tree.clone()));
        Ok(())
    })?;
    Ok(out)
}

/// Counters of one [`piecewise_loss_with_stats`] call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepDiagnostics {
    #[serde(flatten)]
    pub traversal: TraversalStats,
    /// Pieces left after merging equal-loss neighbours.
    pub pieces: usize,
}

/// The instance's pruning loss as a function of the family parameter.
pub fn piecewise_loss(
    instance: &ClusteringInstance,
    family: &FamilySpec,
) -> Result<PiecewiseConstantLoss> {
    Ok(piecewise_loss_with_stats(instance, family)?.0)
}

pub fn piecewise_loss_with_stats(
    instance: &ClusteringInstance,
    family: &FamilySpec,
) -> Result<(PiecewiseConstantLoss, SweepDiagnostics)> {
    let (labels, k) = (instance.labels(), instance.k());
    let mut pieces = Vec::new();
    let traversal = for_each_leaf(instance, family, |iv, tree| {
        pieces.push((iv, hamming_pruning_loss(tree, labels, k)?));
        Ok(())
    })?;
    let loss = PiecewiseConstantLoss::from_pieces(&pieces)?.coalesced();
    let diagnostics = SweepDiagnostics {
        traversal,
        pieces: loss.num_pieces(),
    };
    Ok((loss, diagnostics))
}
