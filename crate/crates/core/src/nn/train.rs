//! Mini-batch training with Adam, plus inference helpers.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::loss::{loss_and_grad, LossKind};
use super::model::{ModelKind, ModelSpec, Network, OutputHead};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const DEFAULT_EPOCHS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: LossKind,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl TrainConfig {
    /// Defaults for a model family and class count: lr 0.001, batch 8 (CNN) or 20 (LSTM),
    /// binary loss for two classes.
    pub fn for_model(kind: ModelKind, classes: usize) -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: kind.default_batch_size(),
            epochs: DEFAULT_EPOCHS,
            loss: LossKind::for_classes(classes),
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!("invalid learning rate {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// One training example: an unbatched input per model branch and a class index.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub inputs: Vec<Tensor>,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean training loss over the epoch's mini-batches.
    pub loss: f64,
    pub accuracy: f64,
}

fn check_data(spec: &ModelSpec, data: &[Sample], loss: LossKind) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Config("no training data".into()));
    }
    if let Some(s) = data.iter().find(|s| s.label >= spec.output_classes) {
        return Err(Error::Config(format!(
            "label {} out of range for {} classes",
            s.label, spec.output_classes
        )));
    }
    if loss != LossKind::for_classes(spec.output_classes) {
        return Err(Error::Config(format!(
            "{loss:?} does not match a {}-class model",
            spec.output_classes
        )));
    }
    Ok(())
}

fn stack_batch(data: &[Sample], idx: &[usize]) -> Result<Vec<Tensor>> {
    let branches = data[idx[0]].inputs.len();
    (0..branches)
        .map(|b| {
            let items: Vec<&Tensor> = idx.iter().map(|&i| &data[i].inputs[b]).collect();
            Tensor::stack(&items)
        })
        .collect()
}

/// Class decision from a row of activated outputs.
pub fn decide(head: OutputHead, probs: &[f64]) -> usize {
    match head {
        OutputHead::Sigmoid => usize::from(probs[0] >= 0.5),
        OutputHead::Softmax => {
            let mut best = 0;
            for (k, &p) in probs.iter().enumerate() {
                if p > probs[best] {
                    best = k;
                }
            }
            best
        }
    }
}

/// Initializes a network from `cfg.seed` and trains it.
pub fn train(spec: &ModelSpec, data: &[Sample], cfg: &TrainConfig) -> Result<(Network, Vec<EpochStats>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Network::new(spec, &mut rng)?;
    let history = train_network(&mut net, data, cfg, &mut rng)?;
    Ok((net, history))
}

/// Trains an existing network in place. `rng` drives shuffling and dropout.
pub fn train_network(
    net: &mut Network,
    data: &[Sample],
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<EpochStats>> {
    cfg.validate()?;
    let spec = net.spec().clone();
    check_data(&spec, data, cfg.loss)?;
    let adam = cfg.adam();
    let mut state = AdamState::new();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let head = spec.output_head();
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        // indexed by sample so the epoch loss does not depend on visiting order
        let mut sample_loss = vec![0.0; data.len()];
        let mut correct = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let inputs = stack_batch(data, batch)?;
            let targets: Vec<usize> = batch.iter().map(|&i| data[i].label).collect();
            net.zero_grads();
            let logits = net.forward_logits(&inputs, Some(rng))?;
            let (losses, grad) = loss_and_grad(cfg.loss, &logits, &targets)?;
            net.backward(&grad)?;
            let probs = net.activate(&logits);
            let width = probs.shape()[1];
            for ((row, &t), (&i, l)) in probs
                .data()
                .chunks_exact(width)
                .zip(&targets)
                .zip(batch.iter().zip(losses))
            {
                sample_loss[i] = l;
                correct += usize::from(decide(head, row) == t);
            }
            state.begin_step();
            let mut outcome = Ok(());
            net.visit_params(&mut |p, g| {
                if outcome.is_ok() {
                    outcome = state.update(p, g, &adam);
                }
            });
            outcome?;
        }
        history.push(EpochStats {
            epoch,
            loss: sample_loss.iter().sum::<f64>() / data.len() as f64,
            accuracy: correct as f64 / data.len() as f64,
        });
    }
    Ok(history)
}

/// Output probabilities for one sample: the softmax vector, or `[p(class 1)]` for a sigmoid head.
pub fn predict(net: &mut Network, inputs: &[Tensor]) -> Result<Vec<f64>> {
    let batched: Vec<Tensor> = inputs.iter().map(|t| t.clone().batched()).collect();
    let logits = net.forward_logits(&batched, None)?;
    Ok(net.activate(&logits).into_data())
}

pub fn predict_class(net: &mut Network, inputs: &[Tensor]) -> Result<usize> {
    let probs = predict(net, inputs)?;
    Ok(decide(net.spec().output_head(), &probs))
}

/// Predicted classes for many samples, evaluated in batches.
pub fn predict_classes(net: &mut Network, data: &[Sample], batch_size: usize) -> Result<Vec<usize>> {
    let head = net.spec().output_head();
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut out = Vec::with_capacity(data.len());
    for chunk in idx.chunks(batch_size.max(1)) {
        let logits = net.forward_logits(&stack_batch(data, chunk)?, None)?;
        let probs = net.activate(&logits);
        let width = probs.shape()[1];
        out.extend(probs.data().chunks_exact(width).map(|row| decide(head, row)));
    }
    Ok(out)
}

/// Mean loss over `data` in inference mode.
pub fn mean_loss(net: &mut Network, data: &[Sample], loss: LossKind) -> Result<f64> {
    check_data(&net.spec().clone(), data, loss)?;
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut total = 0.0;
    for chunk in idx.chunks(32) {
        let logits = net.forward_logits(&stack_batch(data, chunk)?, None)?;
        let targets: Vec<usize> = chunk.iter().map(|&i| data[i].label).collect();
        total += loss_and_grad(loss, &logits, &targets)?.0.iter().sum::<f64>();
    }
    Ok(total / data.len() as f64)
}
