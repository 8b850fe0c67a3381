use crate::error::{Error, Result};
use crate::init::{init_layer, InitMethod};
use crate::linalg::{matmul, matmul_nt, matmul_tn, Matrix};

use super::Activation;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// [N_x, N_1, …, N_y].
    pub layer_dims: Vec<usize>,
    pub activation: Activation,
    pub init: InitMethod,
}

impl NetworkConfig {
    pub fn new(layer_dims: Vec<usize>, activation: Activation, init: InitMethod) -> Self {
        Self {
            layer_dims,
            activation,
            init,
        }
    }

    /// `input`, then `pattern` repeated `repeats` times, then `output`;
    /// e.g. `stacked_dims(4, &[10, 6], 100, 3)` for 200 hidden layers.
    pub fn stacked_dims(input: usize, pattern: &[usize], repeats: usize, output: usize) -> Vec<usize> {
        let mut dims = vec![input];
        for _ in 0..repeats {
            dims.extend_from_slice(pattern);
        }
        dims.push(output);
        dims
    }
}

/// Weights are N_ℓ × N_{ℓ−1}; samples travel as rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub activation: Activation,
}

/// Per-layer pre-activations `z[ℓ]` and activations `a[ℓ]`; `a[0]` is the
/// input batch and the last activation holds softmax probabilities.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub z: Vec<Matrix>,
    pub a: Vec<Matrix>,
}

impl ForwardPass {
    pub fn probabilities(&self) -> &Matrix {
        self.a.last().expect("at least one layer")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

pub fn build(config: &NetworkConfig) -> Result<Network> {
    let dims = &config.layer_dims;
    if dims.len() < 2 {
        return Err(Error::input(format!("need at least input and output widths, got {dims:?}")));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::input(format!("layer widths must be positive, got {dims:?}")));
    }
    let weights = dims
        .windows(2)
        .enumerate()
        .map(|(l, w)| init_layer(&config.init, w[1], w[0], l))
        .collect::<Result<Vec<_>>>()?;
    let biases = dims[1..].iter().map(|&d| vec![0.0; d]).collect();
    Ok(Network {
        weights,
        biases,
        activation: config.activation,
    })
}

/// Row-wise softmax, max-shifted.
pub fn softmax_rows(z: &Matrix) -> Matrix {
    let mut out = z.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

fn affine(x: &Matrix, w: &Matrix, b: &[f64]) -> Matrix {
    let mut z = matmul_nt(x, w);
    for i in 0..z.rows() {
        for (v, bj) in z.row_mut(i).iter_mut().zip(b) {
            *v += bj;
        }
    }
    z
}

impl Network {
    pub fn input_dim(&self) -> usize {
        self.weights[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.last().expect("non-empty").rows()
    }

    pub fn num_hidden_units(&self) -> usize {
        self.biases[..self.biases.len() - 1].iter().map(Vec::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.as_slice().iter().all(|v| v.is_finite()))
            && self.biases.iter().flatten().all(|v| v.is_finite())
    }

    fn check_input(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.input_dim() {
            return Err(Error::Dimension {
                op: "forward",
                detail: format!("batch has {} columns, network expects {}", batch.cols(), self.input_dim()),
            });
        }
        Ok(())
    }

    pub fn forward(&self, batch: &Matrix) -> Result<ForwardPass> {
        self.check_input(batch)?;
        let last = self.weights.len() - 1;
        let mut z = Vec::with_capacity(self.weights.len());
        let mut a = Vec::with_capacity(self.weights.len() + 1);
        a.push(batch.clone());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let zl = affine(&a[l], w, b);
            let al = if l == last {
                softmax_rows(&zl)
            } else {
                let act = self.activation;
                zl.map(|v| act.apply(v))
            };
            z.push(zl);
            a.push(al);
        }
        Ok(ForwardPass { z, a })
    }

    /// Output logits and, for every hidden unit, whether it was nonzero on
    /// any row. Does not keep intermediate layers.
    pub(crate) fn logits_and_alive(&self, batch: &Matrix, alive: &mut [Vec<bool>]) -> Result<Matrix> {
        self.check_input(batch)?;
        let last = self.weights.len() - 1;
        let mut x = batch.clone();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = affine(&x, w, b);
            if l == last {
                return Ok(z);
            }
            let act = self.activation;
            x = z.map(|v| act.apply(v));
            for i in 0..x.rows() {
                for (flag, &v) in alive[l].iter_mut().zip(x.row(i)) {
                    *flag |= v != 0.0;
                }
            }
        }
        unreachable!("loop returns at the output layer")
    }

    /// Mean cross-entropy of softmax(z_L) against `labels`.
    pub fn loss(&self, pass: &ForwardPass, labels: &[usize]) -> f64 {
        mean_cross_entropy(pass.z.last().expect("non-empty"), labels)
    }

    /// Gradients of the mean cross-entropy over the batch.
    pub fn backward(&self, pass: &ForwardPass, labels: &[usize]) -> Result<Gradients> {
        let probs = pass.probabilities();
        if labels.len() != probs.rows() {
            return Err(Error::Dimension {
                op: "backward",
                detail: format!("{} labels for a batch of {}", labels.len(), probs.rows()),
            });
        }
        let batch = probs.rows() as f64;
        // dL/dz_L = (p − y)/B
        let mut delta = probs.clone();
        for (i, &y) in labels.iter().enumerate() {
            delta[(i, y)] -= 1.0;
        }
        let mut delta = delta.scale(1.0 / batch);

        let layers = self.weights.len();
        let mut gw = vec![Matrix::zeros(1, 1); layers];
        let mut gb = vec![Vec::new(); layers];
        for l in (0..layers).rev() {
            gw[l] = matmul_tn(&delta, &pass.a[l]);
            gb[l] = delta.column_sums();
            if l > 0 {
                let back = matmul(&delta, &self.weights[l])?;
                let act = self.activation;
                let zprev = &pass.z[l - 1];
                delta = Matrix::from_fn(back.rows(), back.cols(), |i, j| {
                    back[(i, j)] * act.grad(zprev[(i, j)])
                });
            }
        }
        Ok(Gradients {
            weights: gw,
            biases: gb,
        })
    }
}

pub(crate) fn mean_cross_entropy(logits: &Matrix, labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[y];
    }
    total / labels.len() as f64
}
