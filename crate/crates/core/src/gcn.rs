//! Dense graph convolutional network: propagation matrix, forward pass,
//! masked softmax cross-entropy, and backpropagation.
//!
//! A depth-`L` network computes
//!
//! ```text
//! H0 = X
//! Hl = relu(Â · H(l-1) · Wl)      for l < L
//! logits = Â · H(L-1) · WL
//! ```
//!
//! with `Â = D^-1/2 (A + I) D^-1/2`, `D` the degree matrix of `A + I`.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::DenseMatrix;
use crate::rng::{rng_for, stream};

/// Symmetric renormalized adjacency with self-loops.
pub fn normalize_adjacency(g: &Graph) -> DenseMatrix {
    let n = g.n();
    let deg: Vec<f64> = (0..n).map(|i| (g.degree(i) + 1) as f64).collect();
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 1.0 / deg[i];
        for j in g.neighbors(i) {
            a[(i, j)] = 1.0 / (deg[i] * deg[j]).sqrt();
        }
    }
    a
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcnParams {
    pub layers: Vec<DenseMatrix>,
}

impl GcnParams {
    /// Layer widths `[input, hidden, ..., hidden, classes]` for `depth` layers.
    pub fn architecture(input: usize, hidden: usize, classes: usize, depth: usize) -> Vec<usize> {
        let mut dims = vec![input];
        dims.extend(std::iter::repeat_n(hidden, depth.saturating_sub(1)));
        dims.push(classes);
        dims
    }

    /// Glorot-uniform weights, `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`.
    pub fn glorot(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Config(format!("invalid layer widths {dims:?}")));
        }
        let mut rng = rng_for(seed, stream::INIT);
        let layers = dims
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                let data = (0..w[0] * w[1])
                    .map(|_| rng.gen_range(-limit..limit))
                    .collect();
                DenseMatrix::from_vec(w[0], w[1], data)
            })
            .collect::<Result<_>>()?;
        Ok(GcnParams { layers })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        GcnParams {
            layers: dims
                .windows(2)
                .map(|w| DenseMatrix::zeros(w[0], w[1]))
                .collect(),
        }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self.layers.iter().map(DenseMatrix::rows).collect();
        if let Some(last) = self.layers.last() {
            dims.push(last.cols());
        }
        dims
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, DenseMatrix::cols)
    }

    fn check_chain(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Dimension("network has no layers".into()));
        }
        for (l, w) in self.layers.windows(2).enumerate() {
            if w[0].cols() != w[1].rows() {
                return Err(Error::Dimension(format!(
                    "layer {l} outputs {} values but layer {} expects {}",
                    w[0].cols(),
                    l + 1,
                    w[1].rows()
                )));
            }
        }
        Ok(())
    }

    /// Writes a checkpoint: one JSON header line, then every weight row as
    /// comma-separated values, layer after layer.
    pub fn save_checkpoint(&self, path: impl AsRef<Path>, seed: u64) -> Result<()> {
        let header = CheckpointHeader {
            dims: self.dims(),
            depth: self.depth(),
            seed,
        };
        let mut out = serde_json::to_string(&header)?;
        out.push('\n');
        for w in &self.layers {
            for i in 0..w.rows() {
                let row: Vec<String> = w.row(i).iter().map(|x| format!("{x:e}")).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        std::fs::File::create(path)?.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(Self, CheckpointHeader)> {
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut lines = reader.lines();
        let header: CheckpointHeader = match lines.next() {
            Some(line) => serde_json::from_str(&line?)?,
            None => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "missing checkpoint header".into(),
                })
            }
        };
        if header.dims.len() != header.depth + 1 {
            return Err(Error::Parse {
                line: 1,
                msg: "depth does not match dims".into(),
            });
        }
        let mut layers = Vec::with_capacity(header.depth);
        let mut lineno = 1;
        for w in header.dims.windows(2) {
            let mut data = Vec::with_capacity(w[0] * w[1]);
            for _ in 0..w[0] {
                lineno += 1;
                let line = lines.next().ok_or(Error::Parse {
                    line: lineno,
                    msg: "checkpoint truncated".into(),
                })??;
                for tok in line.split(',') {
                    data.push(tok.trim().parse::<f64>().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("bad weight {tok:?}"),
                    })?);
                }
            }
            layers.push(DenseMatrix::from_vec(w[0], w[1], data)?);
        }
        Ok((GcnParams { layers }, header))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub dims: Vec<usize>,
    pub depth: usize,
    pub seed: u64,
}

/// Propagation matrix and features for one graph, with `Â·X` cached: the
/// first layer is computed as `(Â X) W1`, which stays fixed across epochs.
#[derive(Clone, Debug)]
pub struct GcnInput {
    pub a_hat: DenseMatrix,
    pub x: DenseMatrix,
    ax: DenseMatrix,
}

impl GcnInput {
    pub fn new(a_hat: DenseMatrix, x: DenseMatrix) -> Result<Self> {
        if a_hat.rows() != a_hat.cols() || a_hat.rows() != x.rows() {
            return Err(Error::Dimension(format!(
                "propagation matrix {:?} does not match features {:?}",
                a_hat.shape(),
                x.shape()
            )));
        }
        let ax = a_hat.matmul(&x)?;
        Ok(GcnInput { a_hat, x, ax })
    }

    pub fn from_graph(g: &Graph, x: DenseMatrix) -> Result<Self> {
        Self::new(normalize_adjacency(g), x)
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }
}

#[derive(Clone, Debug)]
pub struct ForwardPass {
    /// `H1 .. H(L-1)`, the post-ReLU activations of every hidden layer.
    pub hidden: Vec<DenseMatrix>,
    pub logits: DenseMatrix,
}

pub fn forward(params: &GcnParams, input: &GcnInput) -> Result<ForwardPass> {
    params.check_chain()?;
    if params.layers[0].rows() != input.x.cols() {
        return Err(Error::Dimension(format!(
            "features have {} columns, first layer expects {}",
            input.x.cols(),
            params.layers[0].rows()
        )));
    }
    let depth = params.depth();
    let mut hidden = Vec::with_capacity(depth - 1);
    let mut pre = input.ax.matmul(&params.layers[0])?;
    for w in &params.layers[1..] {
        let h = pre.map(|v| v.max(0.0));
        pre = input.a_hat.matmul(&h.matmul(w)?)?;
        hidden.push(h);
    }
    Ok(ForwardPass {
        hidden,
        logits: pre,
    })
}

pub fn gcn_forward(
    params: &GcnParams,
    a_hat: &DenseMatrix,
    x: &DenseMatrix,
) -> Result<ForwardPass> {
    forward(params, &GcnInput::new(a_hat.clone(), x.clone())?)
}

/// Row-wise softmax, shifted by the row maximum.
pub fn softmax_rows(logits: &DenseMatrix) -> DenseMatrix {
    let mut p = logits.clone();
    for i in 0..p.rows() {
        let row = p.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    p
}

/// Mean negative log-likelihood over masked rows, plus the softmax of every
/// row. The per-row term is evaluated as `logsumexp(z) - z_y` so that large
/// logits neither overflow nor lose the loss to rounding.
pub fn softmax_cross_entropy(
    logits: &DenseMatrix,
    labels: &[usize],
    mask: &[bool],
) -> Result<(f64, DenseMatrix)> {
    check_targets(logits, labels, mask)?;
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    let mut total = 0.0;
    for i in (0..logits.rows()).filter(|&i| mask[i]) {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
        total += lse - row[labels[i]];
    }
    Ok((total / count as f64, softmax_rows(logits)))
}

fn check_targets(logits: &DenseMatrix, labels: &[usize], mask: &[bool]) -> Result<()> {
    if labels.len() != logits.rows() || mask.len() != logits.rows() {
        return Err(Error::Dimension(format!(
            "{} logit rows, {} labels, {} mask entries",
            logits.rows(),
            labels.len(),
            mask.len()
        )));
    }
    if labels.iter().any(|&y| y >= logits.cols()) {
        return Err(Error::Dimension("label exceeds class count".into()));
    }
    Ok(())
}

/// Everything one optimization step needs.
#[derive(Clone, Debug)]
pub struct LossAndGrads {
    pub forward: ForwardPass,
    pub probabilities: DenseMatrix,
    pub loss: f64,
    pub grads: Vec<DenseMatrix>,
}

/// Loss and exact gradients for every weight matrix.
///
/// With `G` the gradient at a layer's pre-activation and `Â` symmetric,
/// `dW = H_prevᵀ (Â G)` and the gradient flowing into `H_prev` is
/// `(Â G) Wᵀ`, masked by the ReLU (derivative 0 at 0).
pub fn loss_and_grads(
    params: &GcnParams,
    input: &GcnInput,
    labels: &[usize],
    mask: &[bool],
) -> Result<LossAndGrads> {
    let fwd = forward(params, input)?;
    let (loss, probs) = softmax_cross_entropy(&fwd.logits, labels, mask)?;
    let count = mask.iter().filter(|&&m| m).count() as f64;

    let mut g = DenseMatrix::zeros(probs.rows(), probs.cols());
    for i in (0..probs.rows()).filter(|&i| mask[i]) {
        let out = g.row_mut(i);
        out.copy_from_slice(probs.row(i));
        out[labels[i]] -= 1.0;
        for v in out.iter_mut() {
            *v /= count;
        }
    }

    let depth = params.depth();
    let mut grads = vec![DenseMatrix::zeros(0, 0); depth];
    for l in (1..depth).rev() {
        let s = input.a_hat.matmul(&g)?;
        let h_prev = &fwd.hidden[l - 1];
        grads[l] = h_prev.t_matmul(&s)?;
        let mut dh = s.matmul_t(&params.layers[l])?;
        for (d, &h) in dh.as_mut_slice().iter_mut().zip(h_prev.as_slice()) {
            if h <= 0.0 {
                *d = 0.0;
            }
        }
        g = dh;
    }
    grads[0] = input.ax.t_matmul(&g)?;
    Ok(LossAndGrads {
        forward: fwd,
        probabilities: probs,
        loss,
        grads,
    })
}

pub fn gradients(
    params: &GcnParams,
    a_hat: &DenseMatrix,
    x: &DenseMatrix,
    labels: &[usize],
    mask: &[bool],
) -> Result<Vec<DenseMatrix>> {
    let input = GcnInput::new(a_hat.clone(), x.clone())?;
    Ok(loss_and_grads(params, &input, labels, mask)?.grads)
}

/// Argmax labels (lowest index on ties) and softmax probabilities.
pub fn predict(params: &GcnParams, input: &GcnInput) -> Result<(Vec<usize>, DenseMatrix)> {
    let fwd = forward(params, input)?;
    let probs = softmax_rows(&fwd.logits);
    Ok((probs.argmax_rows(), probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_graph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(
        rng: &mut ChaCha8Rng,
        rows: usize,
        cols: usize,
        lo: f64,
        hi: f64,
    ) -> DenseMatrix {
        let data = (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect();
        DenseMatrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn single_node_normalizes_to_one() {
        let a = normalize_adjacency(&Graph::empty(1));
        assert_eq!(a.as_slice(), &[1.0]);
    }

    #[test]
    fn single_edge_normalizes_to_halves() {
        let a = normalize_adjacency(&Graph::complete(2));
        assert_eq!(a.as_slice(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn normalization_matches_direct_formula() {
        let g = random_graph(4, 20, 0.2);
        let n = g.n();
        let a = normalize_adjacency(&g);
        let mut a_tilde = DenseMatrix::identity(n);
        for (i, j) in g.edges() {
            a_tilde[(i, j)] = 1.0;
            a_tilde[(j, i)] = 1.0;
        }
        let deg: Vec<f64> = (0..n).map(|i| a_tilde.row(i).iter().sum()).collect();
        let mut d_inv_sqrt = DenseMatrix::zeros(n, n);
        for i in 0..n {
            d_inv_sqrt[(i, i)] = deg[i].powf(-0.5);
        }
        let direct = d_inv_sqrt
            .matmul(&a_tilde)
            .unwrap()
            .matmul(&d_inv_sqrt)
            .unwrap();
        assert!(a.max_abs_diff(&direct) < 1e-15);
        assert!(a.max_abs_diff(&a.transpose()) == 0.0);
        for i in 0..n {
            let expected: f64 = (0..n)
                .map(|j| a_tilde[(i, j)] / (deg[i] * deg[j]).sqrt())
                .sum();
            let got: f64 = a.row(i).iter().sum();
            assert!((got - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_propagation_is_transparent() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 0.0, 2.0], vec![0.5, 3.0, 0.0]]).unwrap();
        let params = GcnParams {
            layers: vec![DenseMatrix::identity(3)],
        };
        let a = normalize_adjacency(&Graph::empty(2));
        let fwd = gcn_forward(&params, &a, &x).unwrap();
        assert_eq!(fwd.logits, x);
        assert!(fwd.hidden.is_empty());
    }

    #[test]
    fn zero_weights_give_uniform_predictions() {
        let g = random_graph(2, 7, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = random_matrix(&mut rng, 7, 4, -1.0, 1.0);
        let params = GcnParams::zeros(&[4, 5, 3]);
        let input = GcnInput::from_graph(&g, x).unwrap();
        let (labels, probs) = predict(&params, &input).unwrap();
        assert_eq!(labels, vec![0; 7]);
        for &p in probs.as_slice() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_matches_neighborhood_sums() {
        let g = random_graph(8, 5, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_matrix(&mut rng, 5, 3, -1.0, 1.0);
        let params = GcnParams::glorot(&[3, 4, 2], 1).unwrap();
        let a = normalize_adjacency(&g);
        let fwd = gcn_forward(&params, &a, &x).unwrap();

        // per-node aggregation: h_v = sum over u in N(v) ∪ {v} of x_u / sqrt(d_u d_v)
        let deg: Vec<f64> = (0..5).map(|v| (g.degree(v) + 1) as f64).collect();
        let aggregate = |h: &DenseMatrix| {
            let mut out = DenseMatrix::zeros(h.rows(), h.cols());
            for v in 0..5 {
                let neigh: Vec<usize> = g.neighbors(v).chain(std::iter::once(v)).collect();
                for &u in &neigh {
                    for c in 0..h.cols() {
                        out[(v, c)] += h[(u, c)] / (deg[u] * deg[v]).sqrt();
                    }
                }
            }
            out
        };
        let h1 = aggregate(&x)
            .matmul(&params.layers[0])
            .unwrap()
            .map(|v| v.max(0.0));
        let logits = aggregate(&h1).matmul(&params.layers[1]).unwrap();
        assert!(fwd.hidden[0].max_abs_diff(&h1) < 1e-12);
        assert!(fwd.logits.max_abs_diff(&logits) < 1e-12);
    }

    #[test]
    fn forward_rejects_bad_shapes() {
        let a = normalize_adjacency(&Graph::empty(3));
        let x = DenseMatrix::zeros(3, 4);
        let bad_chain = GcnParams {
            layers: vec![DenseMatrix::zeros(4, 5), DenseMatrix::zeros(6, 2)],
        };
        assert!(gcn_forward(&bad_chain, &a, &x).is_err());
        let bad_input = GcnParams::zeros(&[5, 2]);
        assert!(gcn_forward(&bad_input, &a, &x).is_err());
        assert!(GcnInput::new(a, DenseMatrix::zeros(2, 4)).is_err());
    }

    #[test]
    fn uniform_logits_cost_ln2() {
        let z = DenseMatrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let (loss, p) = softmax_cross_entropy(&z, &[0], &[true]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(p.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn huge_logits_are_stable() {
        let z = DenseMatrix::from_rows(&[vec![1000.0, 0.0]]).unwrap();
        let (loss, p) = softmax_cross_entropy(&z, &[0], &[true]).unwrap();
        assert!(loss.abs() < 1e-300 || loss == 0.0);
        assert!(p.is_finite());
        let (loss, _) = softmax_cross_entropy(&z, &[1], &[true]).unwrap();
        assert!((loss - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn empty_mask_is_an_error() {
        let z = DenseMatrix::zeros(2, 2);
        assert!(matches!(
            softmax_cross_entropy(&z, &[0, 1], &[false, false]),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn probabilities_are_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = random_matrix(&mut rng, 50, 6, -30.0, 30.0);
        let p = softmax_rows(&z);
        for i in 0..50 {
            let s: f64 = p.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(p.row(i).iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn single_node_mask_only_uses_that_row() {
        let g = random_graph(6, 6, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_matrix(&mut rng, 6, 3, -1.0, 1.0);
        let params = GcnParams::glorot(&[3, 2], 2).unwrap();
        let a = normalize_adjacency(&g);
        let mut mask = vec![false; 6];
        mask[2] = true;
        let labels = vec![0, 1, 1, 0, 1, 0];
        let grads = gradients(&params, &a, &x, &labels, &mask).unwrap();
        // depth-1 gradient is row 2 of ÂX times (p_2 - y_2)
        let ax = a.matmul(&x).unwrap();
        let p = predict(&params, &GcnInput::new(a, x).unwrap()).unwrap().1;
        for r in 0..3 {
            for c in 0..2 {
                let residual = p[(2, c)] - f64::from(u8::from(c == 1));
                assert!((grads[0][(r, c)] - ax[(2, r)] * residual).abs() < 1e-14);
            }
        }
        // changing another node's label does not move the gradient
        let mut other = labels.clone();
        other[4] = 0;
        let a = normalize_adjacency(&g);
        let x = random_matrix(&mut ChaCha8Rng::seed_from_u64(6), 6, 3, -1.0, 1.0);
        let grads2 = gradients(&params, &a, &x, &other, &mask).unwrap();
        assert_eq!(grads, grads2);
    }

    #[test]
    fn checkpoint_round_trip() {
        let params = GcnParams::glorot(&[5, 4, 3], 9).unwrap();
        let path = std::env::temp_dir().join(format!("khop-ckpt-{}.txt", std::process::id()));
        params.save_checkpoint(&path, 9).unwrap();
        let (back, header) = GcnParams::load_checkpoint(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert_eq!(back, params);
        assert_eq!(
            header,
            CheckpointHeader {
                dims: vec![5, 4, 3],
                depth: 2,
                seed: 9
            }
        );
    }

    #[test]
    fn architecture_widths() {
        assert_eq!(GcnParams::architecture(16, 32, 2, 2), vec![16, 32, 2]);
        assert_eq!(GcnParams::architecture(16, 32, 3, 1), vec![16, 3]);
        assert_eq!(GcnParams::architecture(8, 4, 2, 4), vec![8, 4, 4, 4, 2]);
    }
}
