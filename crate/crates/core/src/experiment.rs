//! Paired training on a graph and its k-hop similar counterpart, one-axis
//! parameter sweeps, and the depth/oversmoothing report.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::components::{complete_components, connected_components};
use crate::error::{Error, Result};
use crate::gcn::{forward, GcnInput};
use crate::graph::Graph;
use crate::khop::{generate_batched, GenConfig, GenReport};
use crate::matrix::DenseMatrix;
use crate::metrics::{
    accuracy, aggregate_runs, mean_probs_on_disagreed, AggregateStats, DisagreedProfile, RunPair,
};
use crate::reach::power_graph;
use crate::rng::derive_seed;
use crate::sbm::{Dataset, Masks, SbmConfig};
use crate::train::{train, RunResult, TrainConfig};

/// Nodes over which accuracy is reported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccuracyScope {
    #[default]
    Test,
    All,
}

impl AccuracyScope {
    pub fn mask(self, masks: &Masks) -> Vec<bool> {
        match self {
            AccuracyScope::Test => masks.test.clone(),
            AccuracyScope::All => Masks::all(masks.test.len()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairOutcome {
    pub pair: RunPair,
    pub report: GenReport,
    pub khop_graph: Graph,
}

/// Seed used for the k-hop model when initializations are not shared.
fn khop_init_seed(seed: u64, independent_init: bool) -> u64 {
    if independent_init {
        derive_seed(seed, 0x6b686f70)
    } else {
        seed
    }
}

fn check_depth_matches_k(gen: &GenConfig, train: &TrainConfig) -> Result<()> {
    if gen.k != train.depth {
        return Err(Error::Config(format!(
            "a {}-layer network must be paired with {}-hop similarity, got k = {}",
            train.depth, train.depth, gen.k
        )));
    }
    Ok(())
}

/// Generates the k-hop similar graph and trains the same architecture on both
/// graphs from the same initialization seed.
pub fn run_pair(
    dataset: &Dataset,
    gen_cfg: &GenConfig,
    train_cfg: &TrainConfig,
) -> Result<PairOutcome> {
    run_pair_with(dataset, gen_cfg, train_cfg, false)
}

pub fn run_pair_with(
    dataset: &Dataset,
    gen_cfg: &GenConfig,
    train_cfg: &TrainConfig,
    independent_init: bool,
) -> Result<PairOutcome> {
    check_depth_matches_k(gen_cfg, train_cfg)?;
    let (khop_graph, report) = generate_batched(&dataset.graph, gen_cfg)?;
    let pair = train_pair(dataset, &khop_graph, train_cfg, independent_init)?;
    Ok(PairOutcome {
        pair,
        report,
        khop_graph,
    })
}

/// Trains on `dataset.graph` and on `other` with everything else shared.
pub fn train_pair(
    dataset: &Dataset,
    other: &Graph,
    train_cfg: &TrainConfig,
    independent_init: bool,
) -> Result<RunPair> {
    let original = train(dataset, train_cfg)?;
    let khop_cfg = TrainConfig {
        seed: khop_init_seed(train_cfg.seed, independent_init),
        ..train_cfg.clone()
    };
    let khop = train(&dataset.with_graph(other.clone())?, &khop_cfg)?;
    RunPair::new(original, khop)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Nodes,
    Intra,
    Inter,
    Classes,
    Depth,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Nodes => "nodes",
            Axis::Intra => "intra",
            Axis::Inter => "inter",
            Axis::Classes => "classes",
            Axis::Depth => "depth",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, Axis::Nodes | Axis::Classes | Axis::Depth)
    }

    /// Sets this axis to `value` on copies of the base configuration. The
    /// depth axis moves the hop bound along with the layer count.
    fn apply(self, value: f64, base: &BaseConfig) -> Result<BaseConfig> {
        let mut cfg = base.clone();
        if self.is_integer() && (value.fract() != 0.0 || value < 1.0) {
            return Err(Error::Config(format!(
                "{} axis needs positive integers, got {value}",
                self.name()
            )));
        }
        match self {
            Axis::Nodes => cfg.sbm.n = value as usize,
            Axis::Intra => cfg.sbm.p_intra = value,
            Axis::Inter => cfg.sbm.p_inter = value,
            Axis::Classes => cfg.sbm.num_classes = value as usize,
            Axis::Depth => {
                cfg.train.depth = value as usize;
                cfg.gen.k = value as usize;
            }
        }
        Ok(cfg)
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "nodes" => Axis::Nodes,
            "intra" => Axis::Intra,
            "inter" => Axis::Inter,
            "classes" => Axis::Classes,
            "depth" => Axis::Depth,
            _ => {
                return Err(Error::Config(format!(
                    "unknown axis {s:?}; expected nodes, intra, inter, classes or depth"
                )))
            }
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaseConfig {
    pub sbm: SbmConfig,
    pub gen: GenConfig,
    pub train: TrainConfig,
}

impl BaseConfig {
    /// Every seed in the configuration set to `seed`.
    pub fn seeded(&self, seed: u64) -> Self {
        let mut cfg = self.clone();
        cfg.sbm.seed = seed;
        cfg.gen.seed = seed;
        cfg.train.seed = seed;
        cfg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: BaseConfig,
    pub axis: Axis,
    pub values: Vec<f64>,
    #[serde(default = "default_runs")]
    pub runs_per_point: usize,
    /// Run `j` of every point uses seed `base_seed + j`.
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub independent_init: bool,
    #[serde(default)]
    pub accuracy_scope: AccuracyScope,
    /// Results CSV.
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    /// JSON-lines file with one record per run.
    #[serde(default)]
    pub records_path: Option<PathBuf>,
    /// Directory receiving both graphs of every run as edge lists.
    #[serde(default)]
    pub graphs_dir: Option<PathBuf>,
    /// Directory receiving one disagreed-node probability CSV per point.
    #[serde(default)]
    pub profile_dir: Option<PathBuf>,
}

fn default_runs() -> usize {
    10
}

impl SweepSpec {
    pub fn new(base: BaseConfig, axis: Axis, values: Vec<f64>) -> Self {
        SweepSpec {
            base,
            axis,
            values,
            runs_per_point: default_runs(),
            base_seed: 0,
            independent_init: false,
            accuracy_scope: AccuracyScope::Test,
            output_path: None,
            records_path: None,
            graphs_dir: None,
            profile_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one axis value".into()));
        }
        if self.runs_per_point == 0 {
            return Err(Error::Config("runs per point must be positive".into()));
        }
        for &v in &self.values {
            let cfg = self.axis.apply(v, &self.base)?;
            cfg.sbm.validate()?;
            cfg.gen.validate()?;
            cfg.train.validate()?;
            check_depth_matches_k(&cfg.gen, &cfg.train)?;
        }
        Ok(())
    }
}

/// Metrics of one paired run inside a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub axis: Axis,
    pub axis_value: f64,
    pub run: usize,
    pub seed: u64,
    pub acc_original: f64,
    pub acc_khop: f64,
    pub disagreement: f64,
    pub edges_original: usize,
    pub removal_count: usize,
    pub batches_tried: usize,
    pub batches_accepted: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub acc_original: AggregateStats,
    pub acc_khop: AggregateStats,
    pub disagreement: AggregateStats,
    pub edges_removed: AggregateStats,
    /// Disagreed-node probability means, pooled over every node of every run
    /// at this point. `None` when no run disagreed anywhere.
    pub profile: Option<DisagreedProfile>,
    pub runs: Vec<RunRecord>,
}

pub const SWEEP_CSV_HEADER: &str = "axis_value,acc_orig_mean,acc_orig_std,acc_khop_mean,acc_khop_std,disagree_mean,disagree_std,edges_removed_mean";

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.axis_value,
            self.acc_original.mean,
            self.acc_original.std,
            self.acc_khop.mean,
            self.acc_khop.std,
            self.disagreement.mean,
            self.disagreement.std,
            self.edges_removed.mean
        )
    }
}

/// One paired run with every seed set to `seed`.
pub fn sweep_run(
    cfg: &BaseConfig,
    seed: u64,
    independent_init: bool,
) -> Result<(PairOutcome, Dataset)> {
    let cfg = cfg.seeded(seed);
    let dataset = Dataset::generate(&cfg.sbm)?;
    let outcome = run_pair_with(&dataset, &cfg.gen, &cfg.train, independent_init)?;
    Ok((outcome, dataset))
}

fn pool_profiles(profiles: &[DisagreedProfile]) -> Option<DisagreedProfile> {
    let total: usize = profiles.iter().map(|p| p.count).sum();
    let first = profiles.first()?;
    let classes = first.mean_original.len();
    let mut orig = vec![0.0; classes];
    let mut khop = vec![0.0; classes];
    for p in profiles {
        let w = p.count as f64 / total as f64;
        for c in 0..classes {
            orig[c] += w * p.mean_original[c];
            khop[c] += w * p.mean_khop[c];
        }
    }
    Some(DisagreedProfile {
        mean_original: orig,
        mean_khop: khop,
        count: total,
    })
}

pub const PROFILE_CSV_HEADER: &str = "class,mean_prob_original,mean_prob_khop";

pub fn profile_csv(profile: &DisagreedProfile) -> String {
    let mut s = String::from(PROFILE_CSV_HEADER);
    s.push('\n');
    for (c, (a, b)) in profile
        .mean_original
        .iter()
        .zip(&profile.mean_khop)
        .enumerate()
    {
        let _ = writeln!(s, "{c},{a},{b}");
    }
    s
}

/// Runs every point of the sweep in axis-value order. When an output path is
/// set, the header and each finished row are flushed as they complete, so a
/// failure leaves the rows computed so far on disk.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut csv = match &spec.output_path {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            writeln!(f, "{SWEEP_CSV_HEADER}")?;
            f.flush()?;
            Some(f)
        }
        None => None,
    };
    let mut records = match &spec.records_path {
        Some(path) => Some(std::fs::File::create(path)?),
        None => None,
    };
    for dir in [&spec.graphs_dir, &spec.profile_dir].into_iter().flatten() {
        std::fs::create_dir_all(dir)?;
    }

    let mut rows = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        let cfg = spec.axis.apply(value, &spec.base)?;
        let mut runs = Vec::with_capacity(spec.runs_per_point);
        let mut profiles = Vec::new();
        for j in 0..spec.runs_per_point {
            let seed = spec.base_seed + j as u64;
            let (outcome, dataset) = sweep_run(&cfg, seed, spec.independent_init)?;
            let mask = spec.accuracy_scope.mask(&dataset.masks);
            let pair = &outcome.pair;
            let record = RunRecord {
                axis: spec.axis,
                axis_value: value,
                run: j,
                seed,
                acc_original: accuracy(&pair.result_original.predictions, &dataset.labels, &mask)?,
                acc_khop: accuracy(&pair.result_khop.predictions, &dataset.labels, &mask)?,
                disagreement: pair.disagreement(),
                edges_original: dataset.graph.edge_count(),
                removal_count: outcome.report.removal_count,
                batches_tried: outcome.report.batches_tried,
                batches_accepted: outcome.report.batches_accepted,
            };
            if let Some(dir) = &spec.graphs_dir {
                let stem = format!("{}_{}_run{}", spec.axis.name(), value, j);
                dataset
                    .graph
                    .save(dir.join(format!("{stem}_original.edges")))?;
                outcome
                    .khop_graph
                    .save(dir.join(format!("{stem}_khop.edges")))?;
            }
            if let Some(f) = records.as_mut() {
                writeln!(f, "{}", serde_json::to_string(&record)?)?;
                f.flush()?;
            }
            if let Some(p) = mean_probs_on_disagreed(pair) {
                profiles.push(p);
            }
            runs.push(record);
        }

        let stats =
            |f: fn(&RunRecord) -> f64| aggregate_runs(&runs.iter().map(f).collect::<Vec<_>>());
        let row = SweepRow {
            axis_value: value,
            acc_original: stats(|r| r.acc_original)?,
            acc_khop: stats(|r| r.acc_khop)?,
            disagreement: stats(|r| r.disagreement)?,
            edges_removed: stats(|r| r.removal_count as f64)?,
            profile: pool_profiles(&profiles),
            runs,
        };
        if let Some(f) = csv.as_mut() {
            writeln!(f, "{}", row.csv_line())?;
            f.flush()?;
        }
        if let (Some(dir), Some(profile)) = (&spec.profile_dir, &row.profile) {
            let path = dir.join(format!("{}_{}_probs.csv", spec.axis.name(), value));
            std::fs::write(path, profile_csv(profile))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Renders rows in the sweep CSV schema.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_CSV_HEADER);
    s.push('\n');
    for row in rows {
        s.push_str(&row.csv_line());
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub size: usize,
    /// Whether the depth-th power of the graph is complete on this component.
    pub power_complete: bool,
    /// Mean squared distance of first-hidden-layer embeddings to the
    /// component centroid, divided by their mean squared norm. Lies in
    /// `[0, 1]` and is unaffected by the scale of the weights.
    pub first_hidden_variance: Option<f64>,
    /// Same measure at the last hidden layer.
    pub last_hidden_variance: Option<f64>,
    /// `last / first`; `None` without hidden layers or when the first-layer
    /// variance is zero.
    pub variance_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OversmoothingReport {
    pub depth: usize,
    pub components: Vec<ComponentReport>,
    /// Disagreement between the network trained on the graph and the one
    /// trained on its component-wise completion.
    pub disagreement: f64,
    pub acc_original: f64,
    pub acc_completed: f64,
    pub graphs_identical: bool,
}

impl OversmoothingReport {
    pub fn max_variance_ratio(&self) -> Option<f64> {
        self.components
            .iter()
            .filter_map(|c| c.variance_ratio)
            .reduce(f64::max)
    }
}

fn component_variance(h: &DenseMatrix, nodes: &[usize]) -> f64 {
    let dim = h.cols();
    let mut centroid = vec![0.0; dim];
    for &v in nodes {
        for (c, &x) in centroid.iter_mut().zip(h.row(v)) {
            *c += x;
        }
    }
    for c in centroid.iter_mut() {
        *c /= nodes.len() as f64;
    }
    let (mut spread, mut norm) = (0.0, 0.0);
    for &v in nodes {
        for (x, c) in h.row(v).iter().zip(&centroid) {
            spread += (x - c) * (x - c);
            norm += x * x;
        }
    }
    if norm == 0.0 {
        0.0
    } else {
        spread / norm
    }
}

/// Trains a depth-`depth` GCN on the dataset graph and on the union of
/// complete graphs over its components (same initialization), then measures
/// how far the hidden representations of each component have collapsed.
pub fn oversmoothing_demo(
    dataset: &Dataset,
    depth: usize,
    train_cfg: &TrainConfig,
) -> Result<OversmoothingReport> {
    if depth < 1 {
        return Err(Error::Config("depth must be at least 1".into()));
    }
    let cfg = TrainConfig {
        depth,
        ..train_cfg.clone()
    };
    let completed = complete_components(&dataset.graph);
    let pair = train_pair(dataset, &completed, &cfg, false)?;

    let input = GcnInput::from_graph(&dataset.graph, dataset.features.clone())?;
    let fwd = forward(&pair.result_original.params, &input)?;
    let power = power_graph(&dataset.graph, depth)?;
    let cc = connected_components(&dataset.graph);

    let components = cc
        .members()
        .into_iter()
        .map(|nodes| {
            let power_complete = nodes
                .iter()
                .all(|&a| nodes.iter().all(|&b| a == b || power.has_edge(a, b)));
            let first = fwd.hidden.first().map(|h| component_variance(h, &nodes));
            let last = fwd.hidden.last().map(|h| component_variance(h, &nodes));
            let variance_ratio = match (first, last) {
                (Some(f), Some(l)) if f > 0.0 => Some(l / f),
                _ => None,
            };
            ComponentReport {
                size: nodes.len(),
                power_complete,
                first_hidden_variance: first,
                last_hidden_variance: last,
                variance_ratio,
            }
        })
        .collect();

    let test = &dataset.masks.test;
    Ok(OversmoothingReport {
        depth,
        components,
        disagreement: pair.disagreement(),
        acc_original: accuracy(&pair.result_original.predictions, &dataset.labels, test)?,
        acc_completed: accuracy(&pair.result_khop.predictions, &dataset.labels, test)?,
        graphs_identical: completed == dataset.graph,
    })
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Per-run result of a `pair` invocation, serialized as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub acc_original: f64,
    pub acc_khop: f64,
    pub disagreement: f64,
    pub disagreement_test: f64,
    pub best_epoch_original: usize,
    pub best_epoch_khop: usize,
    pub edges_original: usize,
    pub edges_khop: usize,
    pub profile: Option<DisagreedProfile>,
}

pub const PAIR_CSV_HEADER: &str =
    "acc_original,acc_khop,disagreement,disagreement_test,edges_original,edges_khop";

impl PairRecord {
    pub fn from_pair(
        pair: &RunPair,
        dataset: &Dataset,
        khop: &Graph,
        scope: AccuracyScope,
    ) -> Result<Self> {
        let mask = scope.mask(&dataset.masks);
        let a: &RunResult = &pair.result_original;
        let b: &RunResult = &pair.result_khop;
        Ok(PairRecord {
            acc_original: accuracy(&a.predictions, &dataset.labels, &mask)?,
            acc_khop: accuracy(&b.predictions, &dataset.labels, &mask)?,
            disagreement: pair.disagreement(),
            disagreement_test: crate::metrics::disagreement_on_mask(
                &a.predictions,
                &b.predictions,
                &dataset.masks.test,
            )?,
            best_epoch_original: a.best_epoch,
            best_epoch_khop: b.best_epoch,
            edges_original: dataset.graph.edge_count(),
            edges_khop: khop.edge_count(),
            profile: mean_probs_on_disagreed(pair),
        })
    }

    pub fn csv(&self) -> String {
        format!(
            "{PAIR_CSV_HEADER}\n{},{},{},{},{},{}\n",
            self.acc_original,
            self.acc_khop,
            self.disagreement,
            self.disagreement_test,
            self.edges_original,
            self.edges_khop
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_base() -> BaseConfig {
        BaseConfig {
            sbm: SbmConfig {
                n: 60,
                feature_dim: 8,
                ..SbmConfig::default()
            },
            train: TrainConfig {
                max_epochs: 40,
                ..TrainConfig::default()
            },
            ..BaseConfig::default()
        }
    }

    #[test]
    fn zero_threshold_pairs_agree_exactly() {
        let base = small_base();
        let ds = Dataset::generate(&base.sbm).unwrap();
        let gen = GenConfig {
            threshold_fraction: 0.0,
            ..base.gen.clone()
        };
        let out = run_pair(&ds, &gen, &base.train).unwrap();
        assert_eq!(out.report.removal_count, 0);
        assert_eq!(out.pair.disagreement(), 0.0);
        assert_eq!(out.pair.result_original, out.pair.result_khop);
    }

    #[test]
    fn depth_must_match_k() {
        let base = small_base();
        let ds = Dataset::generate(&base.sbm).unwrap();
        let gen = GenConfig {
            k: 3,
            ..base.gen.clone()
        };
        assert!(run_pair(&ds, &gen, &base.train).is_err());
    }

    #[test]
    fn single_run_points_have_zero_spread() {
        let mut spec = SweepSpec::new(small_base(), Axis::Classes, vec![2.0, 3.0]);
        spec.runs_per_point = 1;
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert_eq!(row.acc_original.std, 0.0);
            assert_eq!(row.disagreement.std, 0.0);
            assert_eq!(row.runs.len(), 1);
        }
        let csv = sweep_csv(&rows);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with(SWEEP_CSV_HEADER));
    }

    #[test]
    fn axis_parsing_and_validation() {
        assert_eq!("inter".parse::<Axis>().unwrap(), Axis::Inter);
        assert!("edges".parse::<Axis>().is_err());
        let spec = SweepSpec::new(small_base(), Axis::Nodes, vec![50.5]);
        assert!(spec.validate().is_err());
        let spec = SweepSpec::new(small_base(), Axis::Intra, vec![1.5]);
        assert!(spec.validate().is_err());
        let depth = Axis::Depth.apply(3.0, &small_base()).unwrap();
        assert_eq!((depth.gen.k, depth.train.depth), (3, 3));
    }

    #[test]
    fn complete_components_input_gives_identical_graphs() {
        let base = small_base();
        let mut ds = Dataset::generate(&SbmConfig {
            p_intra: 1.0,
            p_inter: 0.0,
            ..base.sbm.clone()
        })
        .unwrap();
        ds.graph = complete_components(&ds.graph);
        let report = oversmoothing_demo(&ds, 2, &base.train).unwrap();
        assert!(report.graphs_identical);
        assert_eq!(report.disagreement, 0.0);
        assert!(report.components.iter().all(|c| c.power_complete));
    }
}
