//! Full-batch GCN training with Adam and validation-loss early stopping.

use serde::{Deserialize, Serialize};

use crate::adam::{adam_step, AdamHyper, AdamState};
use crate::error::{Error, Result};
use crate::gcn::{loss_and_grads, softmax_cross_entropy, GcnInput, GcnParams};
use crate::matrix::DenseMatrix;
use crate::metrics::accuracy;
use crate::sbm::Dataset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without a new best validation loss before stopping.
    pub patience: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Seeds the weight initialization.
    pub seed: u64,
    pub depth: usize,
    pub hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            max_epochs: 200,
            patience: 50,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            depth: 2,
            hidden: 32,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.depth == 0 || self.hidden == 0 {
            return Err(Error::Config(
                "depth and hidden width must be positive".into(),
            ));
        }
        Ok(())
    }

    fn hyper(&self) -> AdamHyper {
        AdamHyper {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    /// Weights at the epoch with the lowest validation loss.
    pub params: GcnParams,
    pub predictions: Vec<usize>,
    pub probabilities: DenseMatrix,
    /// `train_loss[e]` and `val_loss[e]` are measured after `e` optimizer steps.
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
    pub test_accuracy: f64,
}

pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<RunResult> {
    dataset.validate()?;
    let input = GcnInput::from_graph(&dataset.graph, dataset.features.clone())?;
    train_on(&input, dataset, cfg)
}

/// Trains on a prepared input. `dataset` supplies labels and masks only; its
/// graph is not read.
pub fn train_on(input: &GcnInput, dataset: &Dataset, cfg: &TrainConfig) -> Result<RunResult> {
    cfg.validate()?;
    let masks = &dataset.masks;
    for mask in [&masks.train, &masks.val, &masks.test] {
        if !mask.iter().any(|&m| m) {
            return Err(Error::EmptyMask);
        }
    }
    let dims = GcnParams::architecture(input.x.cols(), cfg.hidden, dataset.num_classes, cfg.depth);
    let mut params = GcnParams::glorot(&dims, cfg.seed)?;
    let mut adam = AdamState::for_params(&params.layers);
    let hyper = cfg.hyper();

    let mut train_loss = Vec::new();
    let mut val_loss = Vec::new();
    let mut best: Option<(f64, usize, GcnParams, DenseMatrix)> = None;
    let mut since_best = 0;
    for epoch in 0..=cfg.max_epochs {
        let step = loss_and_grads(&params, input, &dataset.labels, &masks.train)?;
        let (val, _) = softmax_cross_entropy(&step.forward.logits, &dataset.labels, &masks.val)?;
        train_loss.push(step.loss);
        val_loss.push(val);
        if best.as_ref().is_none_or(|b| val < b.0) {
            best = Some((val, epoch, params.clone(), step.probabilities));
            since_best = 0;
        } else {
            since_best += 1;
        }
        if epoch == cfg.max_epochs || since_best >= cfg.patience {
            break;
        }
        adam_step(&mut adam, &mut params.layers, &step.grads, &hyper)?;
    }

    let (_, best_epoch, params, probabilities) = best.expect("at least one epoch is evaluated");
    let predictions = probabilities.argmax_rows();
    let test_accuracy = accuracy(&predictions, &dataset.labels, &masks.test)?;
    Ok(RunResult {
        params,
        predictions,
        probabilities,
        train_loss,
        val_loss,
        best_epoch,
        test_accuracy,
    })
}
