use serde::{Deserialize, Serialize};

use super::layers::{sigmoid_scalar, softmax_slice};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Probabilities are clamped to at least this before taking a log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    CategoricalCrossEntropy,
    BinaryCrossEntropy,
}

impl LossKind {
    pub fn for_classes(classes: usize) -> Self {
        if classes == 2 {
            LossKind::BinaryCrossEntropy
        } else {
            LossKind::CategoricalCrossEntropy
        }
    }
}

pub fn cross_entropy(probs: &[f64], target: usize) -> Result<f64> {
    if target >= probs.len() {
        return Err(Error::Config(format!(
            "target class {target} out of range for {} classes",
            probs.len()
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("probabilities sum to {total}, not 1")));
    }
    Ok(-probs[target].max(PROB_FLOOR).ln())
}

/// `p` is the predicted probability of class 1.
pub fn binary_cross_entropy(p: f64, target: usize) -> Result<f64> {
    match target {
        0 => Ok(-(1.0 - p).max(PROB_FLOOR).ln()),
        1 => Ok(-p.max(PROB_FLOOR).ln()),
        _ => Err(Error::Config(format!("binary target must be 0 or 1, got {target}"))),
    }
}

/// Softmax over each row of `[n, c]` logits followed by categorical cross-entropy.
/// Returns the per-sample losses and the gradient of their mean.
pub fn softmax_cross_entropy(logits: &Tensor, targets: &[usize]) -> Result<(Vec<f64>, Tensor)> {
    logits.expect_rank(2, "logits")?;
    let &[n, c] = logits.shape() else { unreachable!() };
    if targets.len() != n {
        return Err(Error::Shape(format!("{} targets for {n} rows", targets.len())));
    }
    let mut losses = Vec::with_capacity(n);
    let mut grad = Vec::with_capacity(n * c);
    for (row, &t) in logits.data().chunks_exact(c).zip(targets) {
        let probs = softmax_slice(row);
        losses.push(cross_entropy(&probs, t)?);
        grad.extend(probs.iter().enumerate().map(|(k, p)| {
            let y = if k == t { 1.0 } else { 0.0 };
            (p - y) / n as f64
        }));
    }
    Ok((losses, Tensor::new(vec![n, c], grad)?))
}

/// Sigmoid of `[n, 1]` logits followed by binary cross-entropy.
pub fn sigmoid_binary_cross_entropy(logits: &Tensor, targets: &[usize]) -> Result<(Vec<f64>, Tensor)> {
    logits.expect_shape(&[targets.len(), 1], "binary logits")?;
    let n = targets.len();
    let mut losses = Vec::with_capacity(n);
    let mut grad = Vec::with_capacity(n);
    for (&z, &t) in logits.data().iter().zip(targets) {
        let p = sigmoid_scalar(z);
        losses.push(binary_cross_entropy(p, t)?);
        grad.push((p - t as f64) / n as f64);
    }
    Ok((losses, Tensor::new(vec![n, 1], grad)?))
}

pub fn loss_and_grad(kind: LossKind, logits: &Tensor, targets: &[usize]) -> Result<(Vec<f64>, Tensor)> {
    match kind {
        LossKind::CategoricalCrossEntropy => softmax_cross_entropy(logits, targets),
        LossKind::BinaryCrossEntropy => sigmoid_binary_cross_entropy(logits, targets),
    }
}
