use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, Result};

/// Weights and biases of a fully connected network. `weights[h]` is the
/// row-major `(sizes[h + 1] x sizes[h])` matrix feeding layer `h + 1`.
/// Every layer, the output included, applies `tanh`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpParams {
    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    pub fn layer_count(&self) -> usize {
        self.weights.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        check_sizes(layer_sizes)?;
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights: layer_sizes.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect(),
            biases: layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).flatten().all(|v| v.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        check_sizes(&self.layer_sizes)?;
        let shapes_ok = self.weights.len() == self.layer_sizes.len() - 1
            && self.biases.len() == self.weights.len()
            && self
                .layer_sizes
                .windows(2)
                .zip(self.weights.iter().zip(&self.biases))
                .all(|(w, (wm, b))| wm.len() == w[0] * w[1] && b.len() == w[1]);
        if !shapes_ok {
            return Err(Error::Dimension("parameter shapes do not match layer sizes".into()));
        }
        if !self.is_finite() {
            return Err(Error::InvalidArgument("non-finite parameters".into()));
        }
        Ok(())
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "need at least two positive layer sizes, got {sizes:?}"
        )));
    }
    Ok(())
}

/// Uniform Glorot initialization in `+-sqrt(6 / (fan_in + fan_out))`, zero
/// biases.
pub fn init_mlp(layer_sizes: &[usize], seed: u64) -> Result<MlpParams> {
    let mut params = MlpParams::zeros(layer_sizes)?;
    let mut rng = seed::rng(seed);
    for (w, dims) in params.weights.iter_mut().zip(layer_sizes.windows(2)) {
        let limit = (6.0 / (dims[0] + dims[1]) as f64).sqrt();
        w.iter_mut().for_each(|v| *v = rng.random_range(-limit..limit));
    }
    Ok(params)
}

fn check_input(params: &MlpParams, input: &[f64]) -> Result<()> {
    if input.len() != params.input_dim() {
        return Err(Error::Dimension(format!(
            "input has {} values, network expects {}",
            input.len(),
            params.input_dim()
        )));
    }
    Ok(())
}

/// Activations of every layer, input first. Zero inputs are skipped in the
/// first product since D-DPDP features are mostly empty bins.
fn activations(params: &MlpParams, input: &[f64]) -> Vec<Vec<f64>> {
    let mut acts = Vec::with_capacity(params.layer_sizes.len());
    acts.push(input.to_vec());
    let nonzero: Vec<usize> = (0..input.len()).filter(|&j| input[j] != 0.0).collect();
    for (h, (w, b)) in params.weights.iter().zip(&params.biases).enumerate() {
        let prev = &acts[h];
        let fan_in = params.layer_sizes[h];
        let next: Vec<f64> = b
            .iter()
            .enumerate()
            .map(|(i, bias)| {
                let row = &w[i * fan_in..(i + 1) * fan_in];
                let z = if h == 0 {
                    nonzero.iter().map(|&j| row[j] * prev[j]).sum::<f64>()
                } else {
                    row.iter().zip(prev).map(|(a, x)| a * x).sum::<f64>()
                };
                (z + bias).tanh()
            })
            .collect();
        acts.push(next);
    }
    acts
}

pub fn forward(params: &MlpParams, input: &[f64]) -> Result<Vec<f64>> {
    check_input(params, input)?;
    Ok(activations(params, input).pop().expect("output layer"))
}

/// Gradient set with the same shapes as [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_batch(params: &MlpParams, batch: &[(&[f64], &[f64])]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    for (x, t) in batch {
        check_input(params, x)?;
        if t.len() != params.output_dim() {
            return Err(Error::Dimension(format!(
                "target has {} values, network outputs {}",
                t.len(),
                params.output_dim()
            )));
        }
    }
    Ok(())
}

/// Mean squared error over the batch and the output components:
/// `1 / (B q_o) sum_b sum_k (y_bk - t_bk)^2`.
pub fn loss(params: &MlpParams, batch: &[(&[f64], &[f64])]) -> Result<f64> {
    check_batch(params, batch)?;
    let q_o = params.output_dim() as f64;
    let total: f64 = batch
        .iter()
        .map(|(x, t)| {
            let y = activations(params, x).pop().expect("output layer");
            y.iter().zip(t.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        })
        .sum();
    Ok(total / (batch.len() as f64 * q_o))
}

/// Exact gradient of [`loss`] by backpropagation. Samples are accumulated
/// in batch order, so the result is deterministic.
pub fn gradients(params: &MlpParams, batch: &[(&[f64], &[f64])]) -> Result<Gradients> {
    loss_and_gradients(params, batch).map(|(_, g)| g)
}

pub(crate) fn zero_gradients(params: &MlpParams) -> Gradients {
    Gradients {
        weights: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
        biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
    }
}

/// Batch loss together with its gradient, sharing one forward pass.
pub(crate) fn loss_and_gradients(params: &MlpParams, batch: &[(&[f64], &[f64])]) -> Result<(f64, Gradients)> {
    check_batch(params, batch)?;
    let mut grads = zero_gradients(params);
    let denom = batch.len() as f64 * params.output_dim() as f64;
    let scale = 2.0 / denom;
    let layers = params.layer_count();
    let mut total = 0.0;
    for (x, t) in batch {
        let acts = activations(params, x);
        let y = &acts[layers];
        total += y.iter().zip(t.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let mut delta: Vec<f64> = y
            .iter()
            .zip(t.iter())
            .map(|(a, b)| scale * (a - b) * (1.0 - a * a))
            .collect();
        for h in (0..layers).rev() {
            let prev = &acts[h];
            let fan_in = params.layer_sizes[h];
            let gw = &mut grads.weights[h];
            let nonzero: Vec<usize> = (0..fan_in).filter(|&j| prev[j] != 0.0).collect();
            for (i, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                grads.biases[h][i] += d;
                let row = &mut gw[i * fan_in..(i + 1) * fan_in];
                for &j in &nonzero {
                    row[j] += d * prev[j];
                }
            }
            if h > 0 {
                let w = &params.weights[h];
                delta = (0..fan_in)
                    .map(|j| {
                        let back: f64 = delta.iter().enumerate().map(|(i, d)| d * w[i * fan_in + j]).sum();
                        back * (1.0 - prev[j] * prev[j])
                    })
                    .collect();
            }
        }
    }
    Ok((total / denom, grads))
}

/// Index of the largest component; the first one wins ties.
pub fn output_argmax(output: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in output.iter().enumerate() {
        if *v > output[best] {
            best = i;
        }
    }
    best
}

/// Scenario label `1..=q_o` of a feature vector.
pub fn classify(params: &MlpParams, feature: &[f64]) -> Result<u8> {
    let out = forward(params, feature)?;
    Ok(output_argmax(&out) as u8 + 1)
}

/// Operation count of one training pass over `n_training` samples:
/// `sum_{h=1}^{H-1} 2 M q_h q_{h+1} + 2 M q_H q_o + 2 M q_o`, with `H`
/// hidden layers of widths `q_h` and `q_o` outputs.
pub fn complexity_count(params: &MlpParams, n_training: u64) -> u64 {
    let hidden = &params.layer_sizes[1..params.layer_sizes.len() - 1];
    let q_o = params.output_dim() as u64;
    let m = n_training;
    let between: u64 = hidden
        .windows(2)
        .map(|w| 2 * m * w[0] as u64 * w[1] as u64)
        .sum();
    let last_hidden = hidden.last().map_or(0, |&q| 2 * m * q as u64 * q_o);
    between + last_hidden + 2 * m * q_o
}
