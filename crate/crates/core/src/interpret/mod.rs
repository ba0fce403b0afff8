//! Reading a trained model: position importances, peaks, mean motifs,
//! per-input reports and sequence logos.
//!
//! Only positive weights carry importance. A neuron of the last hidden layer
//! (or the kernel layer itself when the head is a single dense layer) scores
//! 1 for class `c` iff its edge to output `c` is positive; every earlier
//! neuron sums `w · score` over its positive outgoing edges. The importance
//! of position `p` is the mean score of the `n` kernel-layer neurons at `p`.
//! A single-logit head is read as two outputs with weights `−w` (class 0)
//! and `+w` (class 1).

mod logo;
mod report;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{dot, KernelParams};
use crate::network::{CmknModel, Head};
use crate::seqdata::{map_position, CirclePoint, EncodedSequence, MotifNpfm};

pub use logo::emit_logo;
pub use report::{global_report, ClassReport, GlobalReport, PeakReport};

pub const DEFAULT_PEAK_WINDOW: usize = 11;
pub const DEFAULT_TOP_PEAKS: usize = 10;

/// Weight matrices of the head with a single-logit output split into two.
fn class_weights(model: &CmknModel) -> Vec<DMatrix<f64>> {
    let mut ws: Vec<DMatrix<f64>> = model.layers.iter().map(|l| l.weights.clone()).collect();
    if model.head == Head::SingleLogit {
        let last = ws.pop().expect("model has a dense layer");
        let mut two = DMatrix::zeros(2, last.ncols());
        two.row_mut(0).copy_from(&(-&last.row(0)));
        two.row_mut(1).copy_from(&last.row(0));
        ws.push(two);
    }
    ws
}

/// Per-neuron scores of the kernel layer for `class`, indexed `anchor * P + position`.
pub fn neuron_scores(model: &CmknModel, class: usize) -> Result<Vec<f64>> {
    if class >= model.num_classes() {
        return Err(Error::invalid(format!(
            "class {class} out of range for {} classes",
            model.num_classes()
        )));
    }
    let ws = class_weights(model);
    let last = ws.last().expect("model has a dense layer");
    let mut score: Vec<f64> = last
        .row(class)
        .iter()
        .map(|&w| if w > 0.0 { 1.0 } else { 0.0 })
        .collect();
    for w in ws[..ws.len() - 1].iter().rev() {
        score = (0..w.ncols())
            .map(|n| {
                (0..w.nrows())
                    .filter(|&m| w[(m, n)] > 0.0)
                    .map(|m| w[(m, n)] * score[m])
                    .sum()
            })
            .collect();
    }
    Ok(score)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionImportance {
    pub class: usize,
    /// Importance of window positions `1..=P` (index `p − 1`).
    pub importance: Vec<f64>,
    /// `importance` minus its mean.
    pub normalized: Vec<f64>,
}

pub fn position_importance(model: &CmknModel, class: usize) -> Result<PositionImportance> {
    let scores = neuron_scores(model, class)?;
    let n = model.anchors.len();
    let p = model.num_positions();
    let importance: Vec<f64> = (0..p)
        .map(|q| (0..n).map(|i| scores[i * p + q]).sum::<f64>() / n as f64)
        .collect();
    let mean = importance.iter().sum::<f64>() / p as f64;
    let normalized = importance.iter().map(|v| v - mean).collect();
    Ok(PositionImportance {
        class,
        importance,
        normalized,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// 1-based window position.
    pub position: usize,
    pub score: f64,
}

/// Ranks positions by `ι(p)` minus the mean of `ι` over the window centered at
/// `p` (truncated at the edges) and returns the `top` best.
pub fn detect_peaks(importance: &[f64], window: usize, top: usize) -> Result<Vec<Peak>> {
    if window % 2 == 0 || window > importance.len() {
        return Err(Error::invalid(format!(
            "peak window must be odd and at most {}, got {window}",
            importance.len()
        )));
    }
    let half = window / 2;
    let len = importance.len();
    let mut peaks: Vec<Peak> = (0..len)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(len - 1);
            let mean = importance[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
            Peak {
                position: i + 1,
                score: importance[i] - mean,
            }
        })
        .collect();
    peaks.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.position.cmp(&b.position)));
    peaks.truncate(top);
    Ok(peaks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanMotif {
    pub class: usize,
    pub position: usize,
    /// `None` when no anchor contributes positively at this position.
    pub npfm: Option<MotifNpfm>,
    /// Contributing anchors and their weights.
    pub anchors: Vec<(usize, f64)>,
}

impl MeanMotif {
    pub fn is_empty(&self) -> bool {
        self.npfm.is_none()
    }
}

fn mean_motif_from_scores(model: &CmknModel, scores: &[f64], position: usize, class: usize) -> MeanMotif {
    let p = model.num_positions();
    let d = model.anchors.motifs().ncols();
    let contributing: Vec<(usize, f64)> = (0..model.anchors.len())
        .map(|i| (i, scores[i * p + position - 1]))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let npfm = if contributing.is_empty() {
        None
    } else {
        let total: f64 = contributing.iter().map(|c| c.1).sum();
        let mut avg = vec![0.0; d];
        for &(i, w) in &contributing {
            for (a, z) in avg.iter_mut().zip(model.anchors.motifs().row(i).iter()) {
                *a += w / total * z;
            }
        }
        MotifNpfm::from_counts(model.alphabet.len(), avg).ok()
    };
    MeanMotif {
        class,
        position,
        npfm,
        anchors: contributing,
    }
}

/// Weighted mean of the anchor motifs feeding position `position` positively
/// toward `class`, columns renormalized to unit ℓ2.
pub fn mean_motif_at(model: &CmknModel, position: usize, class: usize) -> Result<MeanMotif> {
    if position == 0 || position > model.num_positions() {
        return Err(Error::invalid(format!(
            "position {position} outside 1..={}",
            model.num_positions()
        )));
    }
    let scores = neuron_scores(model, class)?;
    Ok(mean_motif_from_scores(model, &scores, position, class))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalEntry {
    pub position: usize,
    /// Input letters of the window starting at `position`.
    pub letters: String,
    /// Per-class motif-function norm; `None` for classes without a mean motif here.
    pub scores: Vec<Option<f64>>,
    /// `scores` divided by their maximum.
    pub scaled: Vec<Option<f64>>,
    pub assigned_class: usize,
    /// Set when several classes share the top score; the lowest index wins.
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalReport {
    pub sequence_id: String,
    pub entries: Vec<LocalEntry>,
    /// Positions with no mean motif for any class.
    pub skipped: Vec<usize>,
}

/// ℓ2 norm of `(K₀((μ, p̃), (ω_q, q̃)))_q` over the input's windows.
fn motif_function_norm(
    motif: &[f64],
    at: &CirclePoint,
    windows: &[(&[f64], CirclePoint)],
    params: &KernelParams,
) -> f64 {
    let (a, g, k) = (params.alpha, params.position_scale(), params.k as f64);
    windows
        .iter()
        .map(|(w, q)| (a * (dot(motif, w) - k) + g * (at.dot(q) - 1.0)).exp().powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Assigns each requested position of `x` to the class whose mean motif has
/// the largest motif-function norm on `x`.
pub fn local_report(model: &CmknModel, x: &EncodedSequence, positions: &[usize]) -> Result<LocalReport> {
    model.check_input(x)?;
    let k = model.params.k;
    let len = x.len();
    let p_count = model.num_positions();
    let windows: Vec<(&[f64], CirclePoint)> = (1..=p_count)
        .map(|q| Ok((x.window(q, k)?, map_position(q, len)?)))
        .collect::<Result<_>>()?;
    let class_scores: Vec<Vec<f64>> = (0..model.num_classes())
        .map(|c| neuron_scores(model, c))
        .collect::<Result<_>>()?;
    let chars: Vec<char> = x.text().chars().collect();
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for &pos in positions {
        if pos == 0 || pos > p_count {
            return Err(Error::invalid(format!("position {pos} outside 1..={p_count}")));
        }
        let at = map_position(pos, len)?;
        let scores: Vec<Option<f64>> = class_scores
            .iter()
            .enumerate()
            .map(|(c, s)| {
                mean_motif_from_scores(model, s, pos, c)
                    .npfm
                    .map(|m| motif_function_norm(m.flattened(), &at, &windows, &model.params))
            })
            .collect();
        let max = scores.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            skipped.push(pos);
            continue;
        }
        let winners: Vec<usize> = (0..scores.len()).filter(|&c| scores[c] == Some(max)).collect();
        let scaled = scores
            .iter()
            .map(|s| s.map(|v| if max > 0.0 { v / max } else { 0.0 }))
            .collect();
        entries.push(LocalEntry {
            position: pos,
            letters: chars[pos - 1..pos - 1 + k].iter().collect(),
            scores,
            scaled,
            assigned_class: winners[0],
            tie: winners.len() > 1,
        });
    }
    Ok(LocalReport {
        sequence_id: x.id.clone(),
        entries,
        skipped,
    })
}

#[cfg(test)]
mod tests;
