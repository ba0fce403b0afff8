use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Softmax cross-entropy scaled by the class weight; one output per class.
    ClassBalancedCe,
    /// Sigmoid binary cross-entropy on a single logit.
    BceLogits,
}

/// Class-balanced weights `(1 − β)/(1 − β^{n_c})`, rescaled to sum to the class count.
pub fn class_balanced_weights(counts: &[usize], cb_beta: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&cb_beta) {
        return Err(Error::invalid(format!("cb_beta must be in [0, 1), got {cb_beta}")));
    }
    if counts.is_empty() || counts.contains(&0) {
        return Err(Error::invalid("every class needs at least one sample"));
    }
    let raw: Vec<f64> = counts
        .iter()
        .map(|&n| (1.0 - cb_beta) / (1.0 - cb_beta.powi(n as i32)))
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.iter().map(|w| w * counts.len() as f64 / total).collect())
}

/// Weighted softmax cross-entropy and its gradient with respect to the logits.
pub fn softmax_cross_entropy(logits: &[f64], label: usize, weight: f64) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    let grad = logits
        .iter()
        .enumerate()
        .map(|(c, z)| weight * ((z - lse).exp() - if c == label { 1.0 } else { 0.0 }))
        .collect();
    (weight * (lse - logits[label]), grad)
}

/// Weighted `−y log σ(z) − (1−y) log(1 − σ(z))`, computed stably.
pub fn bce_with_logits(logit: f64, label: usize, weight: f64) -> (f64, f64) {
    let y = if label == 1 { 1.0 } else { 0.0 };
    let value = logit.max(0.0) - logit * y + (-logit.abs()).exp().ln_1p();
    (weight * value, weight * (sigmoid(logit) - y))
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Loss of one sample; `weights[label]` scales both value and gradient.
pub fn loss(kind: LossKind, logits: &[f64], label: usize, weights: &[f64]) -> Result<(f64, Vec<f64>)> {
    let w = *weights
        .get(label)
        .ok_or_else(|| Error::invalid(format!("label {label} has no class weight")))?;
    match kind {
        LossKind::ClassBalancedCe => {
            if label >= logits.len() {
                return Err(Error::invalid(format!("label {label} out of range for {} logits", logits.len())));
            }
            Ok(softmax_cross_entropy(logits, label, w))
        }
        LossKind::BceLogits => {
            if logits.len() != 1 || label > 1 {
                return Err(Error::invalid("binary cross-entropy needs one logit and a 0/1 label"));
            }
            let (v, g) = bce_with_logits(logits[0], label, w);
            Ok((v, vec![g]))
        }
    }
}
