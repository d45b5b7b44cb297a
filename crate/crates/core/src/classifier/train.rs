use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{classify, loss_and_gradients, zero_gradients, MlpParams};
use crate::features::{one_hot, FeatureVector};
use crate::{seed, Error, Result};

/// Mini-batch gradient descent with momentum. Training stops after `epochs`
/// epochs or once the epoch loss has not improved by a relative
/// `min_rel_improvement` for `patience` consecutive epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub patience: usize,
    pub min_rel_improvement: f64,
    /// Loss below which training is considered converged.
    pub target_loss: f64,
    /// L2 penalty added to the weight gradients (biases are not decayed).
    pub weight_decay: f64,
    /// Probability of zeroing each input value during training (inverted
    /// dropout: kept values are scaled by `1 / (1 - p)`).
    pub input_dropout: f64,
    /// Inputs are dropped in consecutive blocks of this many values; 400
    /// drops whole D-DPDP rows.
    pub dropout_group: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 2000,
            batch_size: 32,
            seed: 0,
            patience: 100,
            min_rel_improvement: 1e-4,
            target_loss: 1e-4,
            weight_decay: 0.0,
            input_dropout: 0.0,
            dropout_group: 1,
        }
    }
}

impl TrainConfig {
    /// Defaults plus input dropout 0.5, the setting used for D-DPDP
    /// features: it keeps the network from keying on single near-zero bins
    /// that noise moves.
    pub fn for_ddpdp() -> Self {
        Self {
            input_dropout: 0.5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning_rate {} must be >= 0", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(format!("momentum {} not in [0, 1)", self.momentum)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidArgument(format!("weight_decay {} must be >= 0", self.weight_decay)));
        }
        if !(0.0..1.0).contains(&self.input_dropout) {
            return Err(Error::InvalidArgument(format!("input_dropout {} not in [0, 1)", self.input_dropout)));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.dropout_group == 0 {
            return Err(Error::InvalidArgument("epochs, batch_size and dropout_group must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Sample-weighted mean of the batch losses seen in each epoch.
    pub epoch_losses: Vec<f64>,
    pub train_accuracy: f64,
    pub stopped_early: bool,
}

impl TrainReport {
    pub fn epochs_run(&self) -> usize {
        self.epoch_losses.len()
    }
}

pub fn train(params: MlpParams, dataset: &[FeatureVector], config: &TrainConfig) -> Result<(MlpParams, TrainReport)> {
    config.validate()?;
    params.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let mut targets = Vec::with_capacity(dataset.len());
    for (i, f) in dataset.iter().enumerate() {
        if f.len() != params.input_dim() {
            return Err(Error::Dimension(format!(
                "training vector {i} has {} values, network expects {}",
                f.len(),
                params.input_dim()
            )));
        }
        let label = f
            .label
            .ok_or_else(|| Error::InvalidArgument(format!("training vector {i} has no label")))?;
        let t = one_hot(label)?.as_f64().to_vec();
        if t.len() != params.output_dim() {
            return Err(Error::Dimension(format!(
                "{} classes but network outputs {}",
                t.len(),
                params.output_dim()
            )));
        }
        targets.push(t);
    }

    let mut params = params;
    let mut velocity = zero_gradients(&params);
    let mut rng = seed::rng(config.seed);
    let mut dropout_rng = seed::rng(seed::derive(config.seed, &[1]));
    let keep_scale = 1.0 / (1.0 - config.input_dropout);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut losses = Vec::new();
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let mut stopped_early = false;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let dropped: Vec<Vec<f64>> = if config.input_dropout > 0.0 {
                chunk
                    .iter()
                    .map(|&i| {
                        let mut x = dataset[i].values.clone();
                        for group in x.chunks_mut(config.dropout_group) {
                            let keep = dropout_rng.random::<f64>() >= config.input_dropout;
                            group.iter_mut().for_each(|v| *v = if keep { *v * keep_scale } else { 0.0 });
                        }
                        x
                    })
                    .collect()
            } else {
                Vec::new()
            };
            let batch: Vec<(&[f64], &[f64])> = chunk
                .iter()
                .enumerate()
                .map(|(k, &i)| {
                    let x = if dropped.is_empty() { &dataset[i].values } else { &dropped[k] };
                    (x.as_slice(), targets[i].as_slice())
                })
                .collect();
            let (l, mut g) = loss_and_gradients(&params, &batch)?;
            if config.weight_decay > 0.0 {
                for (gw, w) in g.weights.iter_mut().zip(&params.weights) {
                    for (a, b) in gw.iter_mut().zip(w) {
                        *a += config.weight_decay * b;
                    }
                }
            }
            epoch_loss += l * chunk.len() as f64;
            let steps = velocity
                .weights
                .iter_mut()
                .zip(params.weights.iter_mut())
                .zip(&g.weights)
                .chain(velocity.biases.iter_mut().zip(params.biases.iter_mut()).zip(&g.biases));
            for ((v, p), g) in steps {
                for ((v, p), g) in v.iter_mut().zip(p.iter_mut()).zip(g) {
                    *v = config.momentum * *v - config.learning_rate * g;
                    *p += *v;
                }
            }
        }
        let epoch_loss = epoch_loss / dataset.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::InvalidState("training diverged (non-finite loss)".into()));
        }
        losses.push(epoch_loss);
        log::debug!("epoch {} loss {epoch_loss:.6e}", losses.len());
        if epoch_loss < config.target_loss {
            stopped_early = losses.len() < config.epochs;
            break;
        }
        if epoch_loss < best * (1.0 - config.min_rel_improvement) {
            best = epoch_loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                stopped_early = true;
                break;
            }
        }
    }

    let correct = dataset
        .iter()
        .map(|f| classify(&params, &f.values).map(|c| Some(c) == f.label))
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&c| c)
        .count();
    let report = TrainReport {
        epoch_losses: losses,
        train_accuracy: correct as f64 / dataset.len() as f64,
        stopped_early,
    };
    Ok((params, report))
}
