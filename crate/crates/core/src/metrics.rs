//! Accuracy, prediction disagreement and run aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::train::RunResult;

/// Fraction of masked nodes whose prediction equals the truth.
pub fn accuracy(predicted: &[usize], truth: &[usize], mask: &[bool]) -> Result<f64> {
    if predicted.len() != truth.len() || mask.len() != truth.len() {
        return Err(Error::SizeMismatch(predicted.len(), truth.len()));
    }
    let mut total = 0usize;
    let mut hits = 0usize;
    for ((p, t), &m) in predicted.iter().zip(truth).zip(mask) {
        if m {
            total += 1;
            hits += usize::from(p == t);
        }
    }
    if total == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(hits as f64 / total as f64)
}

/// Fraction of all `N` nodes on which two prediction vectors differ.
pub fn disagreement(pred1: &[usize], pred2: &[usize]) -> Result<f64> {
    if pred1.len() != pred2.len() {
        return Err(Error::SizeMismatch(pred1.len(), pred2.len()));
    }
    if pred1.is_empty() {
        return Err(Error::Empty("prediction vectors"));
    }
    let differ = pred1.iter().zip(pred2).filter(|(a, b)| a != b).count();
    Ok(differ as f64 / pred1.len() as f64)
}

/// Disagreement restricted to the nodes of `mask`.
pub fn disagreement_on_mask(pred1: &[usize], pred2: &[usize], mask: &[bool]) -> Result<f64> {
    if pred1.len() != pred2.len() || mask.len() != pred1.len() {
        return Err(Error::SizeMismatch(pred1.len(), pred2.len()));
    }
    let (mut total, mut differ) = (0usize, 0usize);
    for ((a, b), &m) in pred1.iter().zip(pred2).zip(mask) {
        if m {
            total += 1;
            differ += usize::from(a != b);
        }
    }
    if total == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(differ as f64 / total as f64)
}

/// Results of training one architecture on a graph and on its k-hop similar
/// counterpart.
#[derive(Clone, Debug, PartialEq)]
pub struct RunPair {
    pub result_original: RunResult,
    pub result_khop: RunResult,
}

impl RunPair {
    pub fn new(result_original: RunResult, result_khop: RunResult) -> Result<Self> {
        let a = result_original.probabilities.shape();
        let b = result_khop.probabilities.shape();
        if a != b {
            return Err(Error::Dimension(format!(
                "paired runs have shapes {a:?} and {b:?}"
            )));
        }
        Ok(RunPair {
            result_original,
            result_khop,
        })
    }

    pub fn disagreement(&self) -> f64 {
        disagreement(
            &self.result_original.predictions,
            &self.result_khop.predictions,
        )
        .unwrap_or(0.0)
    }
}

/// Mean class-probability vectors over the nodes where the two models
/// disagree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisagreedProfile {
    pub mean_original: Vec<f64>,
    pub mean_khop: Vec<f64>,
    pub count: usize,
}

/// `None` when the two models agree on every node.
pub fn mean_probs_on_disagreed(pair: &RunPair) -> Option<DisagreedProfile> {
    let a = &pair.result_original;
    let b = &pair.result_khop;
    let classes = a.probabilities.cols();
    let nodes: Vec<usize> = (0..a.predictions.len())
        .filter(|&i| a.predictions[i] != b.predictions[i])
        .collect();
    if nodes.is_empty() {
        return None;
    }
    let mean = |probs: &crate::matrix::DenseMatrix| {
        let mut acc = vec![0.0; classes];
        for &i in &nodes {
            for (s, &p) in acc.iter_mut().zip(probs.row(i)) {
                *s += p;
            }
        }
        acc.iter().map(|s| s / nodes.len() as f64).collect()
    };
    Some(DisagreedProfile {
        mean_original: mean(&a.probabilities),
        mean_khop: mean(&b.probabilities),
        count: nodes.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub count: usize,
}

pub fn aggregate_runs(values: &[f64]) -> Result<AggregateStats> {
    if values.is_empty() {
        return Err(Error::Empty("run values"));
    }
    let count = values.len();
    let mean = values.iter().sum::<f64>() / count as f64;
    // corrected two-pass: the second term cancels the rounding error of `mean`
    let (sq, lin) = values.iter().fold((0.0, 0.0), |(sq, lin), v| {
        let d = v - mean;
        (sq + d * d, lin + d)
    });
    let var = ((sq - lin * lin / count as f64) / count as f64).max(0.0);
    Ok(AggregateStats {
        mean,
        std: var.sqrt(),
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcn::GcnParams;
    use crate::matrix::DenseMatrix;
    use proptest::prelude::*;

    fn result(predictions: Vec<usize>, rows: Vec<Vec<f64>>) -> RunResult {
        RunResult {
            params: GcnParams::zeros(&[1, 1]),
            predictions,
            probabilities: DenseMatrix::from_rows(&rows).unwrap(),
            train_loss: vec![],
            val_loss: vec![],
            best_epoch: 0,
            test_accuracy: 0.0,
        }
    }

    #[test]
    fn accuracy_cases() {
        let a = [0, 1, 1, 0];
        let b = [0, 1, 0, 0];
        assert_eq!(accuracy(&a, &a, &[true; 4]).unwrap(), 1.0);
        assert_eq!(accuracy(&a, &b, &[true; 4]).unwrap(), 0.75);
        assert_eq!(accuracy(&a, &b, &[true, true, false, false]).unwrap(), 1.0);
        assert!(matches!(
            accuracy(&a, &b, &[false; 4]),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn disagreement_cases() {
        let a = [0, 1, 1, 0];
        assert_eq!(disagreement(&a, &a).unwrap(), 0.0);
        assert_eq!(disagreement(&a, &[0, 1, 0, 0]).unwrap(), 0.25);
        assert_eq!(disagreement(&a, &[1, 0, 0, 1]).unwrap(), 1.0);
        assert!(disagreement(&a, &[0, 1]).is_err());
        assert_eq!(
            disagreement_on_mask(&a, &[0, 1, 0, 0], &[false, false, true, true]).unwrap(),
            0.5
        );
    }

    #[test]
    fn profile_cases() {
        let same = RunPair::new(
            result(vec![0, 1], vec![vec![0.7, 0.3], vec![0.2, 0.8]]),
            result(vec![0, 1], vec![vec![0.6, 0.4], vec![0.1, 0.9]]),
        )
        .unwrap();
        assert_eq!(mean_probs_on_disagreed(&same), None);

        let one = RunPair::new(
            result(vec![0, 1], vec![vec![0.7, 0.3], vec![0.45, 0.55]]),
            result(vec![0, 0], vec![vec![0.6, 0.4], vec![0.52, 0.48]]),
        )
        .unwrap();
        let p = mean_probs_on_disagreed(&one).unwrap();
        assert_eq!(p.count, 1);
        assert_eq!(p.mean_original, vec![0.45, 0.55]);
        assert_eq!(p.mean_khop, vec![0.52, 0.48]);
    }

    #[test]
    fn aggregate_cases() {
        let s = aggregate_runs(&[5.0]).unwrap();
        assert_eq!((s.mean, s.std, s.count), (5.0, 0.0, 1));
        let s = aggregate_runs(&[0.0, 100.0]).unwrap();
        assert_eq!((s.mean, s.std), (50.0, 50.0));
        assert_eq!(aggregate_runs(&[0.3; 10]).unwrap().std, 0.0);
        assert!(aggregate_runs(&[]).is_err());
    }

    fn labels(len: usize) -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(0usize..4, len)
    }

    proptest! {
        #[test]
        fn disagreement_is_a_metric(
            (a, b, c) in (1usize..40).prop_flat_map(|n| (labels(n), labels(n), labels(n)))
        ) {
            let ab = disagreement(&a, &b).unwrap();
            prop_assert_eq!(disagreement(&a, &a).unwrap(), 0.0);
            prop_assert_eq!(ab, disagreement(&b, &a).unwrap());
            let ac = disagreement(&a, &c).unwrap();
            let cb = disagreement(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-12);
        }

        #[test]
        fn metrics_ignore_joint_permutation(
            (a, b, seed) in (1usize..40).prop_flat_map(|n| (labels(n), labels(n), any::<u64>()))
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut perm: Vec<usize> = (0..a.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let pa: Vec<usize> = perm.iter().map(|&i| a[i]).collect();
            let pb: Vec<usize> = perm.iter().map(|&i| b[i]).collect();
            let all = vec![true; a.len()];
            prop_assert_eq!(disagreement(&a, &b).unwrap(), disagreement(&pa, &pb).unwrap());
            prop_assert_eq!(accuracy(&a, &b, &all).unwrap(), accuracy(&pa, &pb, &all).unwrap());
        }
    }
}
