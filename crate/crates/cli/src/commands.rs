use std::path::{Path, PathBuf};
use std::time::Instant;

use linkage_tune::{
    argmin_interval, average_piecewise, generalization_report, hamming_pruning_loss,
    piecewise_loss_with_stats, run_linkage, sample_instances, ClusteringInstance, FamilySpec,
    GaussianBlobsSpec, GeneralizationReport, MatrixSlot, MergeFunctionKind, MetricKind,
    ParameterInterval, PiecewiseConstantLoss, RingsDisksSpec, SweepDiagnostics,
};
use log::{debug, info};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use toml::Value;

use crate::config::Config;
use crate::{CliError, Common};

const COMMON_KEYS: [&str; 3] = ["seed", "jobs", "out_dir"];
const FAMILY_KEYS: [&str; 6] = [
    "family",
    "d0",
    "d1",
    "matrix",
    "matrix0_metric",
    "matrix1_metric",
];

fn allowed_keys(command: &str) -> Vec<&'static str> {
    let own: &[&str] = match command {
        "generate" => &[
            "generator",
            "n_instances",
            "points_per_cluster",
            "clusters",
            "dim",
            "std_dev",
            "include_matrices",
        ],
        "sweep" => &["instances", "manifest"],
        "erm" => &["curves", "sweep_dir", "train_fraction"],
        "eval" => &["instance", "theta"],
        _ => &[],
    };
    let mut keys: Vec<&str> = COMMON_KEYS.iter().chain(own).copied().collect();
    if matches!(command, "sweep" | "eval") {
        keys.extend(FAMILY_KEYS);
    }
    keys
}

pub fn load(command: &str, common: &Common) -> Result<Config, CliError> {
    let allowed = allowed_keys(command);
    let mut config = Config::load(&common.config, command, &allowed)?;
    config.apply_overrides(&common.overrides, &allowed)?;
    if let Some(seed) = common.seed {
        config.set("seed", Value::Integer(seed as i64));
    }
    if let Some(jobs) = common.jobs {
        config.set("jobs", Value::Integer(jobs as i64));
    }
    if let Some(dir) = &common.out_dir {
        config.set("out_dir", Value::String(dir.display().to_string()));
    }
    Ok(config)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn positive(config: &Config, key: &str, default: Option<u64>) -> Result<usize, CliError> {
    match config.uint(key)?.or(default) {
        Some(0) => Err(CliError::usage(format!("'{key}' must be positive"))),
        Some(v) => Ok(v as usize),
        None => Err(CliError::usage(format!("missing required key '{key}'"))),
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    file: String,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    generator: String,
    seed: u64,
    instances: Vec<ManifestEntry>,
}

pub fn generate(config: &Config) -> Result<(), CliError> {
    let generator = config.str("generator")?.unwrap_or("rings-disks");
    let n = positive(config, "n_instances", None)?;
    let seed = config.uint("seed")?.unwrap_or(0);
    let out_dir = config.require_path("out_dir")?;
    let ppc = positive(config, "points_per_cluster", Some(100))?;
    let include_matrices = config.boolean("include_matrices")?.unwrap_or(false);
    let instances = match generator {
        "rings-disks" => {
            for key in ["clusters", "dim", "std_dev"] {
                if config.has(key) {
                    return Err(CliError::usage(format!(
                        "'{key}' does not apply to rings-disks"
                    )));
                }
            }
            sample_instances(&RingsDisksSpec::with_points_per_cluster(ppc), n, seed)
        }
        "gaussian-blobs" => {
            let spec = GaussianBlobsSpec {
                clusters: positive(config, "clusters", Some(3))?,
                points_per_cluster: ppc,
                dim: positive(config, "dim", Some(2))?,
                std_dev: config.float("std_dev")?.unwrap_or(0.1),
            };
            sample_instances(&spec, n, seed)
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown generator '{other}' (expected rings-disks or gaussian-blobs)"
            )))
        }
    }
    .map_err(|e| CliError::usage(e.to_string()))?;

    create_dir(&out_dir)?;
    let mut entries = Vec::with_capacity(n);
    for (i, inst) in instances.into_iter().enumerate() {
        let file = format!("instance_{i:04}.txt");
        let inst = if include_matrices {
            inst
        } else {
            features_only(&inst)?
        };
        write_file(&out_dir.join(&file), &inst.to_text())?;
        entries.push(ManifestEntry {
            file,
            seed: seed.wrapping_add(i as u64),
        });
    }
    let manifest = Manifest {
        generator: generator.to_string(),
        seed,
        instances: entries,
    };
    write_file(&out_dir.join("manifest.json"), &to_json(&manifest))?;
    info!("wrote {n} instances to {}", out_dir.display());
    Ok(())
}

fn features_only(inst: &ClusteringInstance) -> Result<ClusteringInstance, CliError> {
    let features = inst
        .features()
        .ok_or_else(|| CliError::runtime("generated instance has no features"))?;
    let labels: Vec<&str> = inst
        .labels()
        .iter()
        .map(|&l| inst.label_names()[l].as_str())
        .collect();
    ClusteringInstance::from_features(features.to_vec(), &labels)
        .map_err(|e| CliError::runtime(e.to_string()))
}

fn family(config: &Config) -> Result<FamilySpec, CliError> {
    let kind = |key: &str, default: &str| -> Result<MergeFunctionKind, CliError> {
        config
            .str(key)?
            .unwrap_or(default)
            .parse()
            .map_err(|e: linkage_tune::Error| CliError::usage(e.to_string()))
    };
    let name = config.require_str("family")?;
    let merge_only = ["d0", "d1", "matrix"];
    match name {
        "merge" => {
            let matrix = config.uint("matrix")?.unwrap_or(0);
            let matrix = u8::try_from(matrix)
                .ok()
                .and_then(|m| MatrixSlot::from_index(m).ok())
                .ok_or_else(|| CliError::usage("'matrix' must be 0 or 1"))?;
            Ok(FamilySpec::Merge {
                d0: kind("d0", "single")?,
                d1: kind("d1", "complete")?,
                matrix,
            })
        }
        "single-complete" | "average-complete" | "metric" => {
            if let Some(key) = merge_only.iter().find(|k| config.has(k)) {
                return Err(CliError::usage(format!(
                    "'{key}' only applies to family = \"merge\""
                )));
            }
            Ok(match name {
                "single-complete" => FamilySpec::single_complete(),
                "average-complete" => FamilySpec::average_complete(),
                _ => FamilySpec::Metric,
            })
        }
        other => Err(CliError::usage(format!(
            "unknown family '{other}' (expected merge, single-complete, average-complete or metric)"
        ))),
    }
}

/// Reads an instance, fills empty matrix slots from `matrix0_metric` /
/// `matrix1_metric`, and checks it against the family.
fn load_instance(
    config: &Config,
    path: &Path,
    family: &FamilySpec,
) -> Result<ClusteringInstance, CliError> {
    let text = read_file(path)?;
    let mut inst = ClusteringInstance::from_text(&text)
        .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    for (slot, key) in [
        (MatrixSlot::Zero, "matrix0_metric"),
        (MatrixSlot::One, "matrix1_metric"),
    ] {
        // Slot 0 defaults to Euclidean distances over the features.
        let default =
            (slot == MatrixSlot::Zero && inst.features().is_some()).then_some("euclidean");
        if let Some(name) = config.str(key)?.or(default) {
            let metric: MetricKind = name
                .parse()
                .map_err(|e: linkage_tune::Error| CliError::usage(e.to_string()))?;
            inst.ensure_matrix(slot, metric)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        }
    }
    family
        .check(&inst)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok(inst)
}

fn instance_paths(config: &Config) -> Result<Vec<PathBuf>, CliError> {
    let paths = match (config.paths("instances")?, config.path("manifest")?) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage(
                "give either 'instances' or 'manifest', not both",
            ))
        }
        (Some(p), None) => p,
        (None, Some(m)) => {
            let manifest: Manifest = serde_json::from_str(&read_file(&m)?)
                .map_err(|e| CliError::usage(format!("{}: {e}", m.display())))?;
            let dir = m.parent().map(Path::to_path_buf).unwrap_or_default();
            manifest
                .instances
                .iter()
                .map(|e| dir.join(&e.file))
                .collect()
        }
        (None, None) => return Err(CliError::usage("missing 'instances' or 'manifest'")),
    };
    if paths.is_empty() {
        return Err(CliError::usage("no instances given"));
    }
    Ok(paths)
}

fn thread_pool(config: &Config) -> Result<rayon::ThreadPool, CliError> {
    let default = std::thread::available_parallelism().map_or(1, |n| n.get()) as u64;
    let jobs = positive(config, "jobs", Some(default))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::runtime(format!("cannot start {jobs} workers: {e}")))
}

#[derive(Serialize, Deserialize)]
pub struct InstanceDiagnostics {
    pub instance: String,
    pub curve: String,
    #[serde(flatten)]
    pub sweep: SweepDiagnostics,
}

#[derive(Serialize, Deserialize)]
pub struct SweepReport {
    pub family: FamilySpec,
    pub instances: Vec<InstanceDiagnostics>,
    /// Mean leaf count (tree-valued pieces, before merging equal losses).
    pub mean_leaves: f64,
    /// Mean piece count after merging equal adjacent losses.
    pub mean_pieces: f64,
    pub total_edges: u64,
}

#[derive(Serialize)]
struct Timing {
    jobs: usize,
    seconds: Vec<f64>,
    total_seconds: f64,
}

pub fn sweep(config: &Config) -> Result<(), CliError> {
    let family = family(config)?;
    let paths = instance_paths(config)?;
    let out_dir = config.require_path("out_dir")?;
    let pool = thread_pool(config)?;
    let instances = paths
        .iter()
        .map(|p| load_instance(config, p, &family))
        .collect::<Result<Vec<_>, _>>()?;
    create_dir(&out_dir)?;

    let start = Instant::now();
    let results = pool.install(|| {
        instances
            .par_iter()
            .enumerate()
            .map(|(i, inst)| {
                let t = Instant::now();
                let out = piecewise_loss_with_stats(inst, &family);
                debug!("instance {i} swept in {:?}", t.elapsed());
                out.map(|r| (r, t.elapsed().as_secs_f64()))
            })
            .collect::<Vec<_>>()
    });

    // Single collector, in instance order.
    let mut report = SweepReport {
        family,
        instances: Vec::with_capacity(paths.len()),
        mean_leaves: 0.0,
        mean_pieces: 0.0,
        total_edges: 0,
    };
    let mut seconds = Vec::with_capacity(paths.len());
    for (i, (path, result)) in paths.iter().zip(results).enumerate() {
        let ((loss, diag), secs) =
            result.map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
        let curve = format!("curve_{i:04}.txt");
        write_file(&out_dir.join(&curve), &loss.to_text())?;
        info!(
            "{}: {} leaves, {} pieces",
            path.display(),
            diag.traversal.leaves,
            diag.pieces
        );
        report.instances.push(InstanceDiagnostics {
            instance: path.display().to_string(),
            curve,
            sweep: diag,
        });
        seconds.push(secs);
    }
    let count = report.instances.len() as f64;
    report.mean_leaves = report
        .instances
        .iter()
        .map(|d| d.sweep.traversal.leaves as f64)
        .sum::<f64>()
        / count;
    report.mean_pieces = report
        .instances
        .iter()
        .map(|d| d.sweep.pieces as f64)
        .sum::<f64>()
        / count;
    report.total_edges = report
        .instances
        .iter()
        .map(|d| d.sweep.traversal.edges)
        .sum();
    write_file(&out_dir.join("diagnostics.json"), &to_json(&report))?;
    let timing = Timing {
        jobs: pool.current_num_threads(),
        seconds,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    write_file(&out_dir.join("timing.json"), &to_json(&timing))?;
    println!(
        "swept {} instances: mean leaves {:.2}, mean pieces {:.2}",
        report.instances.len(),
        report.mean_leaves,
        report.mean_pieces
    );
    Ok(())
}

#[derive(Serialize)]
struct ErmSummary {
    n_train: usize,
    n_test: usize,
    theta: f64,
    interval: ParameterInterval,
    train_loss: f64,
    loss_at_zero: f64,
    loss_at_one: f64,
    pieces: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    test: Option<GeneralizationReport>,
}

fn curve_paths(config: &Config) -> Result<Vec<PathBuf>, CliError> {
    let paths = match (config.paths("curves")?, config.path("sweep_dir")?) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage(
                "give either 'curves' or 'sweep_dir', not both",
            ))
        }
        (Some(p), None) => p,
        (None, Some(dir)) => {
            let path = dir.join("diagnostics.json");
            let report: SweepReport = serde_json::from_str(&read_file(&path)?)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            report
                .instances
                .iter()
                .map(|d| dir.join(&d.curve))
                .collect()
        }
        (None, None) => return Err(CliError::usage("missing 'curves' or 'sweep_dir'")),
    };
    if paths.is_empty() {
        return Err(CliError::usage("no loss curves given"));
    }
    Ok(paths)
}

fn read_curve(path: &Path) -> Result<PiecewiseConstantLoss, CliError> {
    let text = read_file(path)?;
    let parsed = if text.trim_start().starts_with('{') {
        PiecewiseConstantLoss::from_json(&text)
    } else {
        PiecewiseConstantLoss::from_text(&text)
    };
    parsed.map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

pub fn erm(config: &Config) -> Result<(), CliError> {
    let paths = curve_paths(config)?;
    let out_dir = config.require_path("out_dir")?;
    let fraction = config.float("train_fraction")?.unwrap_or(1.0);
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CliError::usage("'train_fraction' must lie in (0, 1]"));
    }
    let curves = paths
        .iter()
        .map(|p| read_curve(p))
        .collect::<Result<Vec<_>, _>>()?;

    // Seeded shuffle, then the first part trains.
    let mut order: Vec<usize> = (0..curves.len()).collect();
    if fraction < 1.0 {
        let seed = config.uint("seed")?.unwrap_or(0);
        order.shuffle(&mut linkage_tune::rng_from_seed(seed));
    }
    let n_train = ((fraction * curves.len() as f64).round() as usize).clamp(1, curves.len());
    let (train_idx, test_idx) = order.split_at(n_train);
    let pick = |idx: &[usize]| idx.iter().map(|&i| curves[i].clone()).collect::<Vec<_>>();
    let (train, test) = (pick(train_idx), pick(test_idx));

    let average = average_piecewise(&train).map_err(|e| CliError::runtime(e.to_string()))?;
    let (interval, train_loss, theta) = argmin_interval(&average);
    let test = if test.is_empty() {
        None
    } else {
        Some(
            generalization_report(&train, &test, theta)
                .map_err(|e| CliError::runtime(e.to_string()))?,
        )
    };
    let summary = ErmSummary {
        n_train: train.len(),
        n_test: test_idx.len(),
        theta,
        interval,
        train_loss,
        loss_at_zero: average.eval(0.0),
        loss_at_one: average.eval(1.0),
        pieces: average.num_pieces(),
        test,
    };
    create_dir(&out_dir)?;
    write_file(&out_dir.join("average.txt"), &average.to_text())?;
    let json = to_json(&summary);
    write_file(&out_dir.join("summary.json"), &json)?;
    print!("{json}");
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput {
    family: FamilySpec,
    theta: f64,
    loss: f64,
    tree: String,
}

pub fn eval(config: &Config) -> Result<(), CliError> {
    let family = family(config)?;
    let theta = config
        .float("theta")?
        .ok_or_else(|| CliError::usage("missing required key 'theta'"))?;
    if !(0.0..=1.0).contains(&theta) {
        return Err(CliError::usage(format!(
            "theta = {theta} lies outside [0, 1]"
        )));
    }
    let inst = load_instance(config, &config.require_path("instance")?, &family)?;
    let tree = run_linkage(&inst, &family, theta).map_err(|e| CliError::runtime(e.to_string()))?;
    let loss = hamming_pruning_loss(&tree, inst.labels(), inst.k())
        .map_err(|e| CliError::runtime(e.to_string()))?;
    let out = EvalOutput {
        family,
        theta,
        loss,
        tree: tree.to_text_with_ids(inst.point_ids(), false),
    };
    let json = to_json(&out);
    if let Some(dir) = config.path("out_dir")? {
        create_dir(&dir)?;
        write_file(&dir.join("eval.json"), &json)?;
    }
    print!("{json}");
    Ok(())
}
