//! Acceptance criteria A1 to A8. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Pass criterion ids (`A2 A8`) to run a subset.

mod common;

use std::time::{Duration, Instant};

use linkage_tune::{
    argmin_interval, average_piecewise, brute_force_loss, closest_pair, find_merges_alpha,
    find_merges_beta, hamming_pruning_loss, piecewise_loss, piecewise_loss_with_stats,
    rng_from_seed, run_linkage, sample_instances, Cluster, ClusteringInstance, FamilySpec,
    GaussianBlobsSpec, InstanceGenerator, MatrixSlot, MergeEvent, MergeFunctionKind,
    ParameterInterval, PiecewiseConstantLoss, RingsDisksSpec, SweepDiagnostics,
};
use rand::seq::SliceRandom;
use rand::Rng;

use common::{mixed_instance, near_breakpoint, random_labels, random_tree};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn merge_family(d0: MergeFunctionKind, d1: MergeFunctionKind) -> FamilySpec {
    FamilySpec::merge(d0, d1)
}

fn families() -> [(&'static str, FamilySpec); 2] {
    [
        ("single-complete", FamilySpec::single_complete()),
        ("metric", FamilySpec::Metric),
    ]
}

fn fixed_loss(inst: &ClusteringInstance, family: &FamilySpec, theta: f64) -> f64 {
    let tree = run_linkage(inst, family, theta).unwrap();
    hamming_pruning_loss(&tree, inst.labels(), inst.k()).unwrap()
}

fn a1() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(0xA1);
    let (mut checked, mut skipped, mut mismatches) = (0u64, 0u64, 0u64);
    for _ in 0..200 {
        let inst = mixed_instance(&mut rng);
        for (_, family) in families() {
            let f = piecewise_loss(&inst, &family).unwrap();
            for g in 0..=2000 {
                let theta = g as f64 / 2000.0;
                if near_breakpoint(f.breakpoints(), theta, 1e-9) {
                    skipped += 1;
                    continue;
                }
                checked += 1;
                if f.eval(theta) != fixed_loss(&inst, &family, theta) {
                    mismatches += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(120),
        format!(
            "{checked} grid points, {mismatches} mismatches, {skipped} skipped near breakpoints, {:.1}s (limit 120s)",
            elapsed.as_secs_f64()
        ),
    )
}

/// Curves and diagnostics of the rings-and-disks pool (n = 400).
struct RingsPool {
    single_complete: Vec<(PiecewiseConstantLoss, SweepDiagnostics)>,
    average_complete: Vec<(PiecewiseConstantLoss, SweepDiagnostics)>,
}

const A2_INSTANCES: usize = 50;
const A8_POOL: usize = 100;

fn rings_pool(with_a8: bool) -> RingsPool {
    let n_sc = if with_a8 { A8_POOL } else { A2_INSTANCES };
    let spec = RingsDisksSpec::with_points_per_cluster(100);
    let instances = sample_instances(&spec, n_sc, 0).unwrap();
    let sweep = |family: FamilySpec, count: usize| {
        let start = Instant::now();
        let out: Vec<_> = instances[..count]
            .iter()
            .map(|inst| piecewise_loss_with_stats(inst, &family).unwrap())
            .collect();
        eprintln!(
            "  swept {count} instances with {family} in {:.0}s",
            start.elapsed().as_secs_f64()
        );
        out
    };
    RingsPool {
        single_complete: sweep(FamilySpec::single_complete(), n_sc),
        average_complete: sweep(FamilySpec::average_complete(), A2_INSTANCES),
    }
}

fn curves(sweeps: &[(PiecewiseConstantLoss, SweepDiagnostics)]) -> Vec<PiecewiseConstantLoss> {
    sweeps.iter().map(|(f, _)| f.clone()).collect()
}

fn a2(pool: &RingsPool) -> Outcome {
    let avg = average_piecewise(&curves(&pool.single_complete[..A2_INSTANCES])).unwrap();
    let (iv, value, theta) = argmin_interval(&avg);
    let (single, complete) = (avg.eval(0.0), avg.eval(1.0));
    let pass = theta > 0.05 && theta < 0.45 && single - value >= 0.10 && complete - value >= 0.10;
    outcome(
        pass,
        format!(
            "theta* = {theta:.4} in [{:.4}, {:.4}), loss {value:.4}; single {single:.4} (+{:.4}), complete {complete:.4} (+{:.4})",
            iv.lo,
            iv.hi,
            single - value,
            complete - value
        ),
    )
}

fn a3(pool: &RingsPool) -> Outcome {
    let mean = |s: &[(PiecewiseConstantLoss, SweepDiagnostics)], coalesced: bool| {
        s.iter()
            .map(|(_, d)| if coalesced { d.pieces } else { d.traversal.leaves } as f64)
            .sum::<f64>()
            / s.len() as f64
    };
    let sc = &pool.single_complete[..A2_INSTANCES];
    let ac = &pool.average_complete[..];
    let (sc_leaves, ac_leaves) = (mean(sc, false), mean(ac, false));
    let in_band = (10.0..=60.0).contains(&sc_leaves);
    let ordered = ac_leaves < sc_leaves;
    outcome(
        in_band && ordered,
        format!(
            "mean uncoalesced pieces SC {sc_leaves:.1} (band [10, 60]: {}), AC {ac_leaves:.1} (AC < SC: {}); equal-loss merged SC {:.1}, AC {:.1}",
            if in_band { "ok" } else { "outside" },
            if ordered { "ok" } else { "no" },
            mean(sc, true),
            mean(ac, true)
        ),
    )
}

fn a4() -> Outcome {
    let mut rng = rng_from_seed(0xA4);
    let mut mismatches = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=12);
        let k = rng.random_range(1..=4.min(n));
        let tree = random_tree(&mut rng, n);
        let labels: Vec<usize> = random_labels(&mut rng, n, k)
            .iter()
            .map(|l| l[1..].parse().unwrap())
            .collect();
        let dp = hamming_pruning_loss(&tree, &labels, k).unwrap();
        let brute = brute_force_loss(&tree, &labels, k).unwrap();
        if dp != brute {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("500 cases, {mismatches} mismatches"),
    )
}

fn random_clusters(rng: &mut impl Rng, n: usize) -> Vec<Cluster> {
    let m = rng.random_range(2..=n);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut points: Vec<usize> = (0..n).collect();
    points.shuffle(rng);
    for (x, &p) in points.iter().enumerate() {
        let g = if x < m { x } else { rng.random_range(0..m) };
        groups[g].push(p);
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(i, members)| Cluster::new(members, n + i).unwrap())
        .collect()
}

fn random_interval(rng: &mut impl Rng) -> ParameterInterval {
    if rng.random_bool(0.2) {
        return ParameterInterval::UNIT;
    }
    loop {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        if let Ok(iv) = ParameterInterval::new(a.min(b), a.max(b)) {
            return iv;
        }
    }
}

fn tiles(events: &[MergeEvent], iv: ParameterInterval) -> bool {
    !events.is_empty()
        && events[0].interval.lo == iv.lo
        && events.last().unwrap().interval.hi == iv.hi
        && events.iter().all(|e| e.interval.lo < e.interval.hi)
        && events
            .windows(2)
            .all(|w| w[0].interval.hi == w[1].interval.lo)
}

fn a5() -> Outcome {
    let mut rng = rng_from_seed(0xA5);
    let mut details = Vec::new();
    let mut pass = true;
    for (name, family) in families() {
        let (mut bad_tiling, mut bad_argmin, mut events_seen) = (0, 0, 0);
        for _ in 0..1000 {
            let inst = mixed_instance(&mut rng);
            let clusters = random_clusters(&mut rng, inst.len());
            let iv = random_interval(&mut rng);
            let events = match family {
                FamilySpec::Merge { d0, d1, matrix } => {
                    find_merges_alpha(&clusters, d0, d1, inst.matrix(matrix).unwrap(), iv)
                }
                FamilySpec::Metric => {
                    find_merges_beta(&clusters, inst.dist0().unwrap(), inst.dist1().unwrap(), iv)
                }
            }
            .unwrap();
            if !tiles(&events, iv) {
                bad_tiling += 1;
                continue;
            }
            for e in &events {
                events_seen += 1;
                let mid = e.interval.midpoint();
                if closest_pair(&clusters, &family, &inst, mid).unwrap() != e.pair {
                    bad_argmin += 1;
                }
            }
        }
        pass &= bad_tiling == 0 && bad_argmin == 0;
        details.push(format!(
            "{name}: 1000 inputs, {events_seen} events, {bad_tiling} bad tilings, {bad_argmin} wrong midpoints"
        ));
    }
    outcome(pass, details.join("; "))
}

fn a6() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for n in [50, 100, 200] {
        let spec = GaussianBlobsSpec {
            clusters: 5,
            points_per_cluster: n / 5,
            dim: 2,
            std_dev: 0.3,
        };
        let mut rng = rng_from_seed(0xA6 + n as u64);
        let mut inst = spec.sample(&mut rng).unwrap();
        inst.set_matrix(MatrixSlot::One, common::random_metric(&mut rng, n, 2))
            .unwrap();
        let fams = [
            ("SC", FamilySpec::single_complete()),
            ("AC", FamilySpec::average_complete()),
            ("metric", FamilySpec::Metric),
        ];
        for (name, family) in fams {
            let (_, d) = piecewise_loss_with_stats(&inst, &family).unwrap();
            let t = d.traversal;
            let bound = 3 * t.edges * (n * n) as u64;
            let ok = t.evaluations <= bound && t.peak_stack_depth <= n;
            pass &= ok;
            details.push(format!(
                "n={n} {name}: E={} evals={} ({:.3} of 3En^2) stack={}",
                t.edges,
                t.evaluations,
                t.evaluations as f64 / bound as f64,
                t.peak_stack_depth
            ));
        }
    }
    outcome(pass, details.join("; "))
}

/// A random strictly increasing map on `[0, inf)` fixing 0.
fn random_transform(rng: &mut impl Rng) -> impl Fn(f64) -> f64 {
    let a = rng.random_range(0.1..10.0);
    let p = rng.random_range(0.3..3.0);
    let b = rng.random_range(0.0..1.0);
    let c = rng.random_range(0.1..3.0);
    let d = rng.random_range(0.0..2.0);
    move |x: f64| a * x.powf(p) + b * (c * x).exp_m1() + d * x.ln_1p()
}

fn a7() -> Outcome {
    let mut rng = rng_from_seed(0xA7);
    let kinds = [
        MergeFunctionKind::Single,
        MergeFunctionKind::Complete,
        MergeFunctionKind::Average,
    ];
    let mut changed = [0usize; 3];
    for _ in 0..200 {
        let inst = mixed_instance(&mut rng);
        let labels: Vec<&str> = inst
            .labels()
            .iter()
            .map(|&l| inst.label_names()[l].as_str())
            .collect();
        let base: Vec<_> = kinds
            .iter()
            .map(|&k| run_linkage(&inst, &merge_family(k, k), 0.0).unwrap())
            .collect();
        for _ in 0..5 {
            let f = random_transform(&mut rng);
            let moved = inst.dist0().unwrap().map(&f).unwrap();
            let warped = ClusteringInstance::from_matrices(&labels, moved, None).unwrap();
            for (x, &k) in kinds.iter().enumerate() {
                let tree = run_linkage(&warped, &merge_family(k, k), 0.0).unwrap();
                if !tree.same_topology(&base[x]) {
                    changed[x] += 1;
                }
            }
        }
    }
    outcome(
        changed[0] == 0 && changed[1] == 0,
        format!(
            "1000 transformed instances: single changed {}, complete changed {}, average changed {} (allowed)",
            changed[0], changed[1], changed[2]
        ),
    )
}

fn a8(pool: &RingsPool) -> Outcome {
    let curves = curves(&pool.single_complete);
    let mut within = 0;
    let mut gaps = Vec::new();
    for rep in 0..10u64 {
        let mut order: Vec<usize> = (0..curves.len()).collect();
        order.shuffle(&mut rng_from_seed(0xA8 + rep));
        let (train_idx, test_idx) = order.split_at(curves.len() / 2);
        let pick = |idx: &[usize]| idx.iter().map(|&i| curves[i].clone()).collect::<Vec<_>>();
        let train = average_piecewise(&pick(train_idx)).unwrap();
        let test = average_piecewise(&pick(test_idx)).unwrap();
        let (_, train_loss, theta) = argmin_interval(&train);
        let gap = test.eval(theta) - train_loss;
        if gap.abs() < 0.05 {
            within += 1;
        }
        gaps.push(format!("{gap:+.3}"));
    }
    outcome(
        within >= 9,
        format!(
            "{within}/10 splits with |gap| < 0.05 (need 9); gaps [{}]",
            gaps.join(", ")
        ),
    )
}

fn main() {
    let wanted: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .map(|a| a.to_uppercase())
        .collect();
    let run = |id: &str| wanted.is_empty() || wanted.iter().any(|w| w == id);
    let mut failed = Vec::new();
    let mut report = |id: &str, title: &str, o: Outcome| {
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("{id} {status} {title}: {}", o.detail);
        if !o.pass {
            failed.push(id.to_string());
        }
    };
    let start = Instant::now();
    if run("A1") {
        report("A1", "oracle equivalence", a1());
    }
    if run("A4") {
        report("A4", "pruning DP oracle", a4());
    }
    if run("A5") {
        report("A5", "sweep partition", a5());
    }
    if run("A6") {
        report("A6", "work accounting", a6());
    }
    if run("A7") {
        report("A7", "monotone invariance", a7());
    }
    if run("A2") || run("A3") || run("A8") {
        let pool = rings_pool(run("A8"));
        if run("A2") {
            report("A2", "rings-and-disks optimum", a2(&pool));
        }
        if run("A3") {
            report("A3", "piece counts", a3(&pool));
        }
        if run("A8") {
            report("A8", "generalization", a8(&pool));
        }
    }
    println!(
        "acceptance finished in {:.0}s",
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(" "));
        std::process::exit(1);
    }
}
