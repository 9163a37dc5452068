//! Stochastic block model datasets: graph, Gaussian class-mean features,
//! stratified splits, and their on-disk layout.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::DenseMatrix;
use crate::rng::{rng_for, stream};

pub const GRAPH_FILE: &str = "graph.edges";
pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SbmConfig {
    pub n: usize,
    pub num_classes: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub feature_dim: usize,
    pub feature_variance: f64,
    /// Train/validation/test fractions.
    pub split: [f64; 3],
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        SbmConfig {
            n: 300,
            num_classes: 2,
            p_intra: 0.5,
            p_inter: 0.1,
            feature_dim: 32,
            feature_variance: 1.0,
            split: [0.6, 0.2, 0.2],
            seed: 0,
        }
    }
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("node count must be positive".into()));
        }
        if self.num_classes < 2 || self.num_classes > self.n {
            return Err(Error::Config(format!(
                "need 2 <= classes <= nodes, got {} classes for {} nodes",
                self.num_classes, self.n
            )));
        }
        for (name, p) in [("p_intra", self.p_intra), ("p_inter", self.p_inter)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.feature_dim == 0 {
            return Err(Error::Config("feature dimension must be positive".into()));
        }
        if !(self.feature_variance > 0.0) {
            return Err(Error::Config("feature variance must be positive".into()));
        }
        check_fractions(self.split)
    }
}

/// Contiguous block labels: node `i` belongs to block `floor(i * c / n)`.
pub fn block_labels(n: usize, num_classes: usize) -> Vec<usize> {
    (0..n).map(|i| i * num_classes / n).collect()
}

/// Samples an SBM graph; every unordered pair is an independent Bernoulli
/// draw with the intra- or inter-block probability.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<(Graph, Vec<usize>)> {
    cfg.validate()?;
    let labels = block_labels(cfg.n, cfg.num_classes);
    let mut rng = rng_for(cfg.seed, stream::GRAPH);
    let mut g = Graph::empty(cfg.n);
    for i in 0..cfg.n {
        for j in (i + 1)..cfg.n {
            let p = if labels[i] == labels[j] {
                cfg.p_intra
            } else {
                cfg.p_inter
            };
            if rng.gen_bool(p) {
                g.set(i, j, true);
            }
        }
    }
    Ok((g, labels))
}

/// Row `i` is drawn from `N(label_i * 1, variance * I)`.
pub fn generate_features(
    labels: &[usize],
    dim: usize,
    variance: f64,
    seed: u64,
) -> Result<DenseMatrix> {
    if dim == 0 {
        return Err(Error::Config("feature dimension must be positive".into()));
    }
    if !(variance > 0.0) {
        return Err(Error::Config("feature variance must be positive".into()));
    }
    let noise = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = rng_for(seed, stream::FEATURES);
    let data = labels
        .iter()
        .flat_map(|&y| {
            let mean = y as f64;
            (0..dim)
                .map(|_| mean + noise.sample(&mut rng))
                .collect::<Vec<_>>()
        })
        .collect();
    DenseMatrix::from_vec(labels.len(), dim, data)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Masks {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

impl Masks {
    pub fn from_splits(splits: &[Split]) -> Self {
        let pick = |s: Split| splits.iter().map(|&x| x == s).collect();
        Masks {
            train: pick(Split::Train),
            val: pick(Split::Val),
            test: pick(Split::Test),
        }
    }

    pub fn split_of(&self, i: usize) -> Split {
        if self.train[i] {
            Split::Train
        } else if self.val[i] {
            Split::Val
        } else {
            Split::Test
        }
    }

    pub fn all(n: usize) -> Vec<bool> {
        vec![true; n]
    }
}

fn check_fractions(f: [f64; 3]) -> Result<()> {
    if f.iter().any(|&x| !(x > 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split fractions must be positive and sum to 1, got {f:?}"
        )));
    }
    Ok(())
}

/// Stratified random split: within each class the nodes are shuffled and
/// cut at the rounded train and validation counts; the rest are test nodes.
pub fn split_dataset(labels: &[usize], fractions: [f64; 3], seed: u64) -> Result<Masks> {
    check_fractions(fractions)?;
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut splits = vec![Split::Test; labels.len()];
    let mut rng = rng_for(seed, stream::SPLIT);
    for c in 0..classes {
        let mut nodes: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        nodes.shuffle(&mut rng);
        let size = nodes.len();
        let n_train = ((fractions[0] * size as f64).round() as usize).min(size);
        let n_val = ((fractions[1] * size as f64).round() as usize).min(size - n_train);
        for (rank, &v) in nodes.iter().enumerate() {
            splits[v] = if rank < n_train {
                Split::Train
            } else if rank < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
        }
    }
    Ok(Masks::from_splits(&splits))
}

/// A node-classification instance. Paired experiments reuse one dataset and
/// swap only the graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub masks: Masks,
}

impl Dataset {
    /// Graph, features and split all follow from `cfg` (including its seed).
    pub fn generate(cfg: &SbmConfig) -> Result<Self> {
        let (graph, labels) = generate_sbm(cfg)?;
        let features = generate_features(&labels, cfg.feature_dim, cfg.feature_variance, cfg.seed)?;
        let masks = split_dataset(&labels, cfg.split, cfg.seed)?;
        Ok(Dataset {
            graph,
            features,
            labels,
            num_classes: cfg.num_classes,
            masks,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn with_graph(&self, graph: Graph) -> Result<Self> {
        if graph.n() != self.n() {
            return Err(Error::SizeMismatch(graph.n(), self.n()));
        }
        Ok(Dataset {
            graph,
            ..self.clone()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.graph.n() != n || self.features.rows() != n {
            return Err(Error::Dimension(format!(
                "dataset has {n} labels, {} graph nodes and {} feature rows",
                self.graph.n(),
                self.features.rows()
            )));
        }
        if let Some(&bad) = self.labels.iter().find(|&&y| y >= self.num_classes) {
            return Err(Error::Config(format!(
                "label {bad} out of range for {} classes",
                self.num_classes
            )));
        }
        for mask in [&self.masks.train, &self.masks.val, &self.masks.test] {
            if mask.len() != n {
                return Err(Error::Dimension(
                    "mask length differs from node count".into(),
                ));
            }
        }
        Ok(())
    }

    /// Writes `graph.edges`, `features.csv` (one row per node, no header) and
    /// `labels.csv` (`node,label,split`) into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.graph.save(dir.join(GRAPH_FILE))?;

        let mut feats = String::new();
        for i in 0..self.features.rows() {
            let row = self.features.row(i);
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    feats.push(',');
                }
                let _ = write!(feats, "{x}");
            }
            feats.push('\n');
        }
        std::fs::write(dir.join(FEATURES_FILE), feats)?;

        let mut labels = String::from("node,label,split\n");
        for (i, y) in self.labels.iter().enumerate() {
            let _ = writeln!(labels, "{i},{y},{}", self.masks.split_of(i).as_str());
        }
        let mut f = std::fs::File::create(dir.join(LABELS_FILE))?;
        f.write_all(labels.as_bytes())?;
        Ok(())
    }

    /// Reads a directory written by [`Dataset::save`]. The class count is
    /// taken as one more than the largest label.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let graph = Graph::load(dir.join(GRAPH_FILE))?;

        let mut rows = Vec::new();
        let reader = BufReader::new(std::fs::File::open(dir.join(FEATURES_FILE))?);
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|_| Error::Parse {
                        line: idx + 1,
                        msg: format!("bad feature value {t:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let features = DenseMatrix::from_rows(&rows)?;

        let reader = BufReader::new(std::fs::File::open(dir.join(LABELS_FILE))?);
        let mut entries = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if idx == 0 || line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |msg: &str| Error::Parse {
                line: lineno,
                msg: msg.to_string(),
            };
            if parts.len() != 3 {
                return Err(bad("expected node,label,split"));
            }
            let node: usize = parts[0].parse().map_err(|_| bad("bad node id"))?;
            let label: usize = parts[1].parse().map_err(|_| bad("bad label"))?;
            let split = match parts[2] {
                "train" => Split::Train,
                "val" => Split::Val,
                "test" => Split::Test,
                _ => return Err(bad("split must be train, val or test")),
            };
            entries.push((node, label, split));
        }
        let n = graph.n();
        if entries.len() != n {
            return Err(Error::Dimension(format!(
                "labels file has {} rows for {n} nodes",
                entries.len()
            )));
        }
        let mut labels = vec![usize::MAX; n];
        let mut splits = vec![Split::Test; n];
        for (node, label, split) in entries {
            if node >= n || labels[node] != usize::MAX {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("node {node} missing, repeated or out of range"),
                });
            }
            labels[node] = label;
            splits[node] = split;
        }
        let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
        let ds = Dataset {
            graph,
            features,
            labels,
            num_classes,
            masks: Masks::from_splits(&splits),
        };
        ds.validate()?;
        Ok(ds)
    }
}
