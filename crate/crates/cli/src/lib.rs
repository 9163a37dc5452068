//! Argument parsing and dispatch for the `khop` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use khop_core::experiment::{
    oversmoothing_demo, profile_csv, run_sweep, train_pair, AccuracyScope, Axis, BaseConfig,
    PairRecord, SweepSpec,
};
use khop_core::gcn::GcnInput;
use khop_core::khop::{generate_batched, GenConfig, ReachBackend};
use khop_core::reach::{is_k_hop_similar, power_graph};
use khop_core::sbm::{Dataset, SbmConfig};
use khop_core::train::{train_on, TrainConfig};
use khop_core::{Error, Graph, Result};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "khop",
    version,
    about = "Generate k-hop similar graphs and compare GCNs trained on them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a stochastic block model dataset into a directory.
    GenSbm(GenSbmArgs),
    /// Delete edges from a graph while keeping its k-hop reachability.
    KhopGen(KhopGenArgs),
    /// Print whether two edge lists are k-hop similar.
    CheckSimilar(CheckSimilarArgs),
    /// Print the k-th power of a graph as an edge list.
    Power(PowerArgs),
    /// Train a GCN on a dataset.
    Train(TrainArgs),
    /// Train on a graph and on a k-hop similar counterpart, and compare.
    Pair(PairArgs),
    /// Repeat paired runs while varying one parameter.
    Sweep(SweepArgs),
    /// Train a deep GCN on a graph and on its component-wise completion.
    Oversmooth(OversmoothArgs),
}

#[derive(Args, Debug, Default, Clone)]
struct SbmFlags {
    /// Number of nodes.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    classes: Option<usize>,
    /// Edge probability inside a block.
    #[arg(long)]
    intra: Option<f64>,
    /// Edge probability between blocks.
    #[arg(long)]
    inter: Option<f64>,
    #[arg(long)]
    feature_dim: Option<usize>,
    #[arg(long)]
    feature_variance: Option<f64>,
    /// Train,val,test fractions, e.g. `0.6,0.2,0.2`.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    split: Option<Vec<f64>>,
}

impl SbmFlags {
    fn apply(&self, cfg: &mut SbmConfig) {
        set(&mut cfg.n, self.nodes);
        set(&mut cfg.num_classes, self.classes);
        set(&mut cfg.p_intra, self.intra);
        set(&mut cfg.p_inter, self.inter);
        set(&mut cfg.feature_dim, self.feature_dim);
        set(&mut cfg.feature_variance, self.feature_variance);
        if let Some(s) = &self.split {
            cfg.split = [s[0], s[1], s[2]];
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Bitset,
    FloydWarshall,
}

impl From<BackendArg> for ReachBackend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Bitset => ReachBackend::Bitset,
            BackendArg::FloydWarshall => ReachBackend::FloydWarshall,
        }
    }
}

#[derive(Args, Debug, Default, Clone)]
struct GenFlags {
    /// Hop bound.
    #[arg(long)]
    k: Option<usize>,
    /// Fraction of the edges to aim to remove.
    #[arg(long)]
    threshold_frac: Option<f64>,
    /// Edges per batch (default: half the removal target).
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
}

impl GenFlags {
    fn apply(&self, cfg: &mut GenConfig) {
        set(&mut cfg.k, self.k);
        set(&mut cfg.threshold_fraction, self.threshold_frac);
        if self.batch_size.is_some() {
            cfg.batch_size = self.batch_size;
        }
        if let Some(b) = self.backend {
            cfg.backend = b.into();
        }
    }
}

#[derive(Args, Debug, Default, Clone)]
struct TrainFlags {
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    /// Number of GCN layers.
    #[arg(long)]
    depth: Option<usize>,
}

impl TrainFlags {
    fn apply(&self, cfg: &mut TrainConfig) {
        set(&mut cfg.learning_rate, self.lr);
        set(&mut cfg.max_epochs, self.epochs);
        set(&mut cfg.patience, self.patience);
        set(&mut cfg.hidden, self.hidden);
        set(&mut cfg.depth, self.depth);
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScopeArg {
    Test,
    All,
}

impl From<ScopeArg> for AccuracyScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::Test => AccuracyScope::Test,
            ScopeArg::All => AccuracyScope::All,
        }
    }
}

#[derive(Args, Debug)]
struct GenSbmArgs {
    /// JSON file with `sbm`, `gen` and `train` sections; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    sbm: SbmFlags,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct KhopGenArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    gen: GenFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    /// Write the generation report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckSimilarArgs {
    first: PathBuf,
    second: PathBuf,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Accepted for uniformity; the check is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct PowerArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Write the edge list here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Accepted for uniformity; the computation is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Directory written by `gen-sbm`.
    #[arg(long)]
    dataset: PathBuf,
    /// Train on this edge list instead of the dataset's graph.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    train: TrainFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Save the selected weights.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Write accuracy, best epoch and loss curves as JSON.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write `node,predicted,label,split` rows.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PairArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Use this k-hop similar graph instead of generating one.
    #[arg(long)]
    khop: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    gen: GenFlags,
    #[command(flatten)]
    train: TrainFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initialize the second model from a different seed.
    #[arg(long)]
    independent_init: bool,
    #[arg(long, value_enum, default_value = "test")]
    accuracy_scope: ScopeArg,
    /// CSV with one header and one result line.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Mean class probabilities on the nodes where the models disagree.
    #[arg(long)]
    probs: Option<PathBuf>,
    /// Save the generated k-hop graph.
    #[arg(long)]
    save_khop: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON sweep specification; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    axis: Option<String>,
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Runs per axis value.
    #[arg(long)]
    runs: Option<usize>,
    /// Run j of every point uses seed + j.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    sbm: SbmFlags,
    #[command(flatten)]
    gen: GenFlags,
    #[command(flatten)]
    train: TrainFlags,
    #[arg(long)]
    independent_init: bool,
    #[arg(long, value_enum)]
    accuracy_scope: Option<ScopeArg>,
    /// Results CSV (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
    /// JSON-lines file with one record per run.
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long)]
    graphs_dir: Option<PathBuf>,
    #[arg(long)]
    profile_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OversmoothArgs {
    /// Dataset directory; a fresh SBM with no inter-block edges is sampled
    /// when absent.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[command(flatten)]
    sbm: SbmFlags,
    #[command(flatten)]
    train: TrainFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit status. Results go to `out`, diagnostics to `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::GenSbm(a) => gen_sbm(a, out),
        Command::KhopGen(a) => khop_gen(a, out),
        Command::CheckSimilar(a) => {
            let g1 = Graph::load(&a.first)?;
            let g2 = Graph::load(&a.second)?;
            writeln!(out, "{}", is_k_hop_similar(&g1, &g2, a.k)?)?;
            Ok(())
        }
        Command::Power(a) => {
            let p = power_graph(&Graph::load(&a.input)?, a.k)?;
            match &a.output {
                Some(path) => p.save(path),
                None => Ok(write!(out, "{}", p.to_edge_list_string())?),
            }
        }
        Command::Train(a) => train_cmd(a, out),
        Command::Pair(a) => pair(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Oversmooth(a) => oversmooth(a, out),
    }
}

fn load_base(path: Option<&Path>) -> Result<BaseConfig> {
    match path {
        Some(p) => Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?),
        None => Ok(BaseConfig::default()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    khop_core::experiment::write_text(path, &text)
}

fn gen_sbm(a: GenSbmArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_base(a.config.as_deref())?.sbm;
    a.sbm.apply(&mut cfg);
    set(&mut cfg.seed, a.seed);
    let ds = Dataset::generate(&cfg)?;
    ds.save(&a.output)?;
    writeln!(
        out,
        "wrote {} nodes, {} edges, {} classes to {}",
        ds.n(),
        ds.graph.edge_count(),
        ds.num_classes,
        a.output.display()
    )?;
    Ok(())
}

fn khop_gen(a: KhopGenArgs, out: &mut dyn Write) -> Result<()> {
    let g = Graph::load(&a.input)?;
    let mut cfg = GenConfig {
        seed: a.seed,
        ..GenConfig::default()
    };
    a.gen.apply(&mut cfg);
    let (khop, report) = generate_batched(&g, &cfg)?;
    khop.save(&a.output)?;
    if let Some(path) = &a.report {
        write_json(path, &report)?;
    }
    writeln!(
        out,
        "removed {} of {} edges ({} of {} batches accepted)",
        report.removal_count,
        g.edge_count(),
        report.batches_accepted,
        report.batches_tried
    )?;
    Ok(())
}

fn train_config(base: &BaseConfig, flags: &TrainFlags, seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig {
        seed,
        ..base.train.clone()
    };
    flags.apply(&mut cfg);
    cfg
}

#[derive(Serialize)]
struct TrainSummary {
    test_accuracy: f64,
    best_epoch: usize,
    epochs_run: usize,
    train_loss: Vec<f64>,
    val_loss: Vec<f64>,
}

fn train_cmd(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let mut ds = Dataset::load(&a.dataset)?;
    if let Some(path) = &a.graph {
        ds = ds.with_graph(Graph::load(path)?)?;
    }
    let cfg = train_config(&load_base(a.config.as_deref())?, &a.train, a.seed);
    let input = GcnInput::from_graph(&ds.graph, ds.features.clone())?;
    let res = train_on(&input, &ds, &cfg)?;
    if let Some(path) = &a.checkpoint {
        res.params.save_checkpoint(path, cfg.seed)?;
    }
    if let Some(path) = &a.predictions {
        let mut text = String::from("node,predicted,label,split\n");
        for (i, (p, y)) in res.predictions.iter().zip(&ds.labels).enumerate() {
            text.push_str(&format!("{i},{p},{y},{}\n", ds.masks.split_of(i).as_str()));
        }
        khop_core::experiment::write_text(path, &text)?;
    }
    let summary = TrainSummary {
        test_accuracy: res.test_accuracy,
        best_epoch: res.best_epoch,
        epochs_run: res.val_loss.len() - 1,
        train_loss: res.train_loss,
        val_loss: res.val_loss,
    };
    if let Some(path) = &a.output {
        write_json(path, &summary)?;
    }
    writeln!(
        out,
        "test accuracy {:.4} at epoch {} of {}",
        summary.test_accuracy, summary.best_epoch, summary.epochs_run
    )?;
    Ok(())
}

fn pair(a: PairArgs, out: &mut dyn Write) -> Result<()> {
    let ds = Dataset::load(&a.dataset)?;
    let base = load_base(a.config.as_deref())?;
    let mut gen = GenConfig {
        seed: a.seed,
        ..base.gen.clone()
    };
    a.gen.apply(&mut gen);
    let mut train = train_config(&base, &a.train, a.seed);
    // a k-layer network goes with k-hop similarity unless set explicitly
    match (a.gen.k, a.train.depth) {
        (Some(k), None) => train.depth = k,
        (None, Some(d)) => gen.k = d,
        _ => {}
    }
    if gen.k != train.depth {
        return Err(Error::Config(format!(
            "hop bound {} and network depth {} must match",
            gen.k, train.depth
        )));
    }

    let khop = match &a.khop {
        Some(path) => {
            let g = Graph::load(path)?;
            if !is_k_hop_similar(&ds.graph, &g, gen.k)? {
                return Err(Error::Config(format!(
                    "{} is not {}-hop similar to the dataset graph",
                    path.display(),
                    gen.k
                )));
            }
            g
        }
        None => generate_batched(&ds.graph, &gen)?.0,
    };
    if let Some(path) = &a.save_khop {
        khop.save(path)?;
    }
    let pair = train_pair(&ds, &khop, &train, a.independent_init)?;
    let record = PairRecord::from_pair(&pair, &ds, &khop, a.accuracy_scope.into())?;

    match &a.output {
        Some(path) => khop_core::experiment::write_text(path, &record.csv())?,
        None => write!(out, "{}", record.csv())?,
    }
    if let Some(path) = &a.json {
        write_json(path, &record)?;
    }
    if let Some(path) = &a.probs {
        let text = match &record.profile {
            Some(p) => profile_csv(p),
            None => format!("{}\n", khop_core::experiment::PROFILE_CSV_HEADER),
        };
        khop_core::experiment::write_text(path, &text)?;
    }
    Ok(())
}

fn sweep(a: SweepArgs, out: &mut dyn Write) -> Result<()> {
    let mut spec = match &a.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => SweepSpec::new(BaseConfig::default(), Axis::Nodes, Vec::new()),
    };
    if let Some(axis) = &a.axis {
        spec.axis = axis.parse()?;
    } else if a.config.is_none() {
        return Err(Error::Config("--axis is required without --config".into()));
    }
    set(&mut spec.values, a.values.clone());
    set(&mut spec.runs_per_point, a.runs);
    set(&mut spec.base_seed, a.seed);
    a.sbm.apply(&mut spec.base.sbm);
    a.gen.apply(&mut spec.base.gen);
    a.train.apply(&mut spec.base.train);
    match (a.gen.k, a.train.depth) {
        (Some(k), None) => spec.base.train.depth = k,
        (None, Some(d)) => spec.base.gen.k = d,
        _ => {}
    }
    spec.independent_init |= a.independent_init;
    if let Some(s) = a.accuracy_scope {
        spec.accuracy_scope = s.into();
    }
    for (slot, flag) in [
        (&mut spec.output_path, &a.output),
        (&mut spec.records_path, &a.records),
        (&mut spec.graphs_dir, &a.graphs_dir),
        (&mut spec.profile_dir, &a.profile_dir),
    ] {
        if flag.is_some() {
            slot.clone_from(flag);
        }
    }

    let rows = run_sweep(&spec)?;
    if spec.output_path.is_none() {
        write!(out, "{}", khop_core::experiment::sweep_csv(&rows))?;
    }
    Ok(())
}

fn oversmooth(a: OversmoothArgs, out: &mut dyn Write) -> Result<()> {
    let ds = match &a.dataset {
        Some(dir) => Dataset::load(dir)?,
        None => {
            let mut cfg = SbmConfig {
                p_inter: 0.0,
                seed: a.seed,
                ..SbmConfig::default()
            };
            a.sbm.apply(&mut cfg);
            Dataset::generate(&cfg)?
        }
    };
    let mut train = TrainConfig {
        seed: a.seed,
        depth: 8,
        ..TrainConfig::default()
    };
    a.train.apply(&mut train);
    let report = oversmoothing_demo(&ds, train.depth, &train)?;
    match &a.output {
        Some(path) => write_json(path, &report)?,
        None => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
    }
    Ok(())
}
