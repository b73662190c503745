//! Hamming distance between a target clustering and the best pruning of a
//! cluster tree.
//!
//! A pruning into `k` clusters is a set of `k` disjoint subtrees covering
//! every leaf. The loss is the fraction of points that land outside their
//! target cluster under the best pruning and the best bijection between
//! pruned subtrees and target clusters.
//!
//! [`hamming_pruning_loss`] solves this with a dynamic program over tree
//! nodes and subsets of target labels: `f(v, S)` is the fewest mismatches
//! when `v`'s subtree is pruned into `|S|` pieces assigned bijectively to the
//! labels in `S`. [`brute_force_loss`] enumerates prunings and bijections
//! directly and exists as an independent check.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::tree::{ClusterTree, NodeId};

/// Largest number of target clusters the subset DP accepts.
pub const K_MAX: usize = 16;

const INF: u32 = u32::MAX / 2;

fn check_target(tree: &ClusterTree, labels: &[usize], k: usize) -> Result<()> {
    if labels.len() != tree.num_leaves() {
        return Err(Error::invalid(format!(
            "{} labels for a tree with {} leaves",
            labels.len(),
            tree.num_leaves()
        )));
    }
    if k == 0 {
        return Err(Error::invalid("target has no clusters"));
    }
    let mut seen = vec![false; k];
    for &l in labels {
        if l >= k {
            return Err(Error::invalid(format!("label {l} outside 0..{k}")));
        }
        seen[l] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::invalid("some target cluster is empty"));
    }
    Ok(())
}

/// Minimum mismatch count (not normalised). See the module docs.
pub fn hamming_pruning_mismatches(tree: &ClusterTree, labels: &[usize], k: usize) -> Result<usize> {
    check_target(tree, labels, k)?;
    if k > K_MAX {
        return Err(Error::unsupported(format!(
            "k = {k} exceeds the limit of {K_MAX}"
        )));
    }
    let n = tree.num_leaves();
    let full = (1usize << k) - 1;

    // Per-node label histograms and leaf counts, bottom-up in merge order.
    let mut hist = vec![0u32; tree.num_nodes() * k];
    let mut count = vec![1u32; tree.num_nodes()];
    for (i, &l) in labels.iter().enumerate() {
        hist[i * k + l] = 1;
    }
    for (t, &(a, b)) in tree.merges().iter().enumerate() {
        let v = n + t;
        for l in 0..k {
            hist[v * k + l] = hist[a * k + l] + hist[b * k + l];
        }
        count[v] = count[a] + count[b];
    }

    // Tables for leaves are implicit; internal tables are dropped once their
    // parent has been computed.
    let mut tables: Vec<Option<Vec<u32>>> = vec![None; tree.num_nodes()];
    let singleton = |v: NodeId, s: usize| -> u32 {
        let l = s.trailing_zeros() as usize;
        count[v] - hist[v * k + l]
    };
    let lookup = |tables: &[Option<Vec<u32>>], v: NodeId, s: usize| -> u32 {
        if s.is_power_of_two() {
            singleton(v, s)
        } else if v < n {
            INF
        } else {
            tables[v].as_ref().expect("child table")[s]
        }
    };

    for (t, &(a, b)) in tree.merges().iter().enumerate() {
        let v = n + t;
        let mut f = vec![INF; full + 1];
        for s in 1..=full {
            if s.is_power_of_two() {
                f[s] = singleton(v, s);
                continue;
            }
            if s.count_ones() > count[v] {
                continue;
            }
            let mut best = INF;
            // Nonempty proper submasks go to the left child.
            let mut left = (s - 1) & s;
            while left > 0 {
                let x = lookup(&tables, a, left);
                if x < best {
                    let y = lookup(&tables, b, s ^ left);
                    best = best.min(x + y);
                }
                left = (left - 1) & s;
            }
            f[s] = best.min(INF);
        }
        tables[a] = None;
        tables[b] = None;
        tables[v] = Some(f);
    }
    let root = tree.root();
    let best = lookup(&tables, root, full);
    if best >= INF {
        return Err(Error::invalid(format!(
            "a tree with {n} leaves cannot be pruned into {k} clusters"
        )));
    }
    Ok(best as usize)
}

/// `min over prunings and bijections of (1/n) sum_i |C_i \ P_sigma(i)|`.
pub fn hamming_pruning_loss(tree: &ClusterTree, labels: &[usize], k: usize) -> Result<f64> {
    Ok(hamming_pruning_mismatches(tree, labels, k)? as f64 / labels.len() as f64)
}

/// Size limits of [`brute_force_loss`].
pub const BRUTE_FORCE_MAX_N: usize = 16;
pub const BRUTE_FORCE_MAX_K: usize = 4;

/// Enumerates every pruning into `k` subtrees and every bijection.
pub fn brute_force_loss(tree: &ClusterTree, labels: &[usize], k: usize) -> Result<f64> {
    check_target(tree, labels, k)?;
    let n = tree.num_leaves();
    if n > BRUTE_FORCE_MAX_N || k > BRUTE_FORCE_MAX_K {
        return Err(Error::unsupported(format!(
            "brute force is limited to n <= {BRUTE_FORCE_MAX_N}, k <= {BRUTE_FORCE_MAX_K}"
        )));
    }
    let targets: Vec<Vec<usize>> = (0..k)
        .map(|c| (0..n).filter(|&i| labels[i] == c).collect())
        .collect();
    let mut best = usize::MAX;
    for pruning in prunings(tree, tree.root(), k) {
        let pieces: Vec<Vec<usize>> = pruning.iter().map(|&v| tree.leaves(v)).collect();
        for sigma in (0..k).permutations(k) {
            let missed: usize = targets
                .iter()
                .enumerate()
                .map(|(i, c)| c.iter().filter(|p| !pieces[sigma[i]].contains(p)).count())
                .sum();
            best = best.min(missed);
        }
    }
    if best == usize::MAX {
        return Err(Error::invalid("tree cannot be pruned into k clusters"));
    }
    Ok(best as f64 / n as f64)
}

/// All ways to cut the subtree at `v` into exactly `j` subtrees.
fn prunings(tree: &ClusterTree, v: NodeId, j: usize) -> Vec<Vec<NodeId>> {
    if j == 1 {
        return vec![vec![v]];
    }
    let Some((a, b)) = tree.children(v) else {
        return vec![];
    };
    let mut out = Vec::new();
    for jl in 1..j {
        let left = prunings(tree, a, jl);
        if left.is_empty() {
            continue;
        }
        let right = prunings(tree, b, j - jl);
        for l in &left {
            for r in &right {
                out.push(l.iter().chain(r).copied().collect());
            }
        }
    }
    out
}
