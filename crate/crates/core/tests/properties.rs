//! End-to-end invariants on random small instances.

mod common;

use linkage_tune::{
    average_piecewise, enumerate_leaves, hamming_pruning_loss, piecewise_loss_with_stats,
    rng_from_seed, run_linkage, ClusterTree, ClusteringInstance, ExecutionNode, FamilySpec,
    MergeFunctionKind, ParameterInterval, PiecewiseConstantLoss,
};
use proptest::prelude::*;

use common::{mixed_instance, near_breakpoint};

fn family(choice: u8) -> FamilySpec {
    use MergeFunctionKind::*;
    match choice % 4 {
        0 => FamilySpec::single_complete(),
        1 => FamilySpec::average_complete(),
        2 => FamilySpec::merge(Complete, Single),
        _ => FamilySpec::Metric,
    }
}

/// Leaves of the execution tree expanded node by node, without the DFS.
fn explicit_leaves(
    inst: &ClusteringInstance,
    family: &FamilySpec,
    node: ExecutionNode,
    out: &mut Vec<ParameterInterval>,
) {
    if node.clusters.len() == 1 {
        out.push(node.interval);
        return;
    }
    for child in node.children(inst, family).unwrap() {
        explicit_leaves(inst, family, child, out);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_curve_matches_fixed_runs(seed in any::<u64>(), choice in any::<u8>(), ts in prop::collection::vec(0.0..1.0f64, 20)) {
        let inst = mixed_instance(&mut rng_from_seed(seed));
        let fam = family(choice);
        let (loss, stats) = piecewise_loss_with_stats(&inst, &fam).unwrap();
        prop_assert!(stats.traversal.peak_stack_depth <= inst.len());
        prop_assert!(stats.pieces <= stats.traversal.leaves);
        let bps = loss.breakpoints();
        for t in ts {
            if near_breakpoint(bps, t, 1e-9) {
                continue;
            }
            let tree = run_linkage(&inst, &fam, t).unwrap();
            let direct = hamming_pruning_loss(&tree, inst.labels(), inst.k()).unwrap();
            prop_assert_eq!(loss.eval(t), direct);
        }
    }

    #[test]
    fn leaf_trees_are_the_fixed_parameter_trees(seed in any::<u64>(), choice in any::<u8>()) {
        let inst = mixed_instance(&mut rng_from_seed(seed));
        let fam = family(choice);
        let leaves = enumerate_leaves(&inst, &fam).unwrap();
        prop_assert_eq!(leaves[0].0.lo, 0.0);
        prop_assert_eq!(leaves.last().unwrap().0.hi, 1.0);
        for w in leaves.windows(2) {
            prop_assert_eq!(w[0].0.hi, w[1].0.lo);
        }
        for (iv, tree) in &leaves {
            if iv.width() < 1e-9 {
                continue;
            }
            let fixed: ClusterTree = run_linkage(&inst, &fam, iv.midpoint()).unwrap();
            prop_assert!(fixed.same_topology(tree));
        }
    }

    #[test]
    fn traversal_visits_the_explicit_tree(seed in any::<u64>(), choice in any::<u8>()) {
        let mut rng = rng_from_seed(seed);
        let mut inst = mixed_instance(&mut rng);
        while inst.len() > 12 {
            inst = mixed_instance(&mut rng);
        }
        let fam = family(choice);
        let mut explicit = Vec::new();
        explicit_leaves(&inst, &fam, ExecutionNode::root(inst.len()), &mut explicit);
        let dfs: Vec<ParameterInterval> =
            enumerate_leaves(&inst, &fam).unwrap().into_iter().map(|(iv, _)| iv).collect();
        // Average linkage is updated incrementally in the DFS and recomputed
        // here, so breakpoints may differ by rounding.
        prop_assert_eq!(explicit.len(), dfs.len());
        for (a, b) in explicit.iter().zip(&dfs) {
            prop_assert!((a.lo - b.lo).abs() < 1e-9 && (a.hi - b.hi).abs() < 1e-9, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn average_is_the_pointwise_mean(seeds in prop::collection::vec(any::<u64>(), 1..6), t in 0.0..1.0f64) {
        let curves: Vec<PiecewiseConstantLoss> = seeds
            .iter()
            .map(|&s| {
                let inst = mixed_instance(&mut rng_from_seed(s));
                piecewise_loss_with_stats(&inst, &FamilySpec::single_complete()).unwrap().0
            })
            .collect();
        let avg = average_piecewise(&curves).unwrap();
        let mean = curves.iter().map(|c| c.eval(t)).sum::<f64>() / curves.len() as f64;
        prop_assert!((avg.eval(t) - mean).abs() < 1e-12);
    }
}
