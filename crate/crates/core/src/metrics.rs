//! Binary classification metrics and cross-validation aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub f1: f64,
    pub mcc: f64,
    /// `None` when only one class is present.
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub n_samples: usize,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "accuracy,f1,mcc,auroc,auprc,tp,fp,tn,fn,n_samples";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| v.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.accuracy,
            self.f1,
            self.mcc,
            opt(self.auroc),
            opt(self.auprc),
            self.tp,
            self.fp,
            self.tn,
            self.fn_,
            self.n_samples
        )
    }

    /// Accuracy, F1, auROC and MCC in that order (auROC as `-inf` when undefined).
    pub fn selection_metrics(&self) -> [f64; 4] {
        [self.accuracy, self.f1, self.auroc.unwrap_or(f64::NEG_INFINITY), self.mcc]
    }
}

/// Thresholded and ranking metrics for binary labels; `score >= threshold` predicts 1.
pub fn compute_metrics(labels: &[usize], scores: &[f64], threshold: f64) -> Result<MetricsReport> {
    if labels.is_empty() || labels.len() != scores.len() {
        return Err(Error::invalid(format!(
            "need equal nonzero lengths, got {} labels and {} scores",
            labels.len(),
            scores.len()
        )));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&l, &s) in labels.iter().zip(scores) {
        match (l == 1, s >= threshold) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    let n = labels.len();
    let accuracy = (tp + tn) as f64 / n as f64;
    let f1_den = 2 * tp + fp + fn_;
    let f1 = if f1_den == 0 { 0.0 } else { 2.0 * tp as f64 / f1_den as f64 };
    let (tpf, fpf, tnf, fnf) = (tp as f64, fp as f64, tn as f64, fn_ as f64);
    let den = ((tpf + fpf) * (tpf + fnf) * (tnf + fpf) * (tnf + fnf)).sqrt();
    let mcc = if den == 0.0 { 0.0 } else { (tpf * tnf - fpf * fnf) / den };
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let (auroc, auprc) = if pos == 0 || pos == n {
        (None, None)
    } else {
        (Some(auroc_rank(labels, scores)), Some(auprc_step(labels, scores)))
    };
    Ok(MetricsReport {
        accuracy,
        f1,
        mcc,
        auroc,
        auprc,
        tp,
        fp,
        tn,
        fn_,
        n_samples: n,
    })
}

fn order_by_score(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    idx
}

/// Mann–Whitney U over average ranks, divided by `n₊n₋`.
fn auroc_rank(labels: &[usize], scores: &[f64]) -> f64 {
    let idx = order_by_score(scores);
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            ranks[t] = avg;
        }
        i = j + 1;
    }
    let npos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let nneg = labels.len() as f64 - npos;
    let rank_sum: f64 = labels.iter().zip(&ranks).filter(|(&l, _)| l == 1).map(|(_, r)| r).sum();
    (rank_sum - npos * (npos + 1.0) / 2.0) / (npos * nneg)
}

/// Average precision: `Σ (R_t − R_{t−1}) P_t` over distinct score thresholds.
fn auprc_step(labels: &[usize], scores: &[f64]) -> f64 {
    let mut idx = order_by_score(scores);
    idx.reverse();
    let npos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let (mut tp, mut seen) = (0.0, 0.0);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let s = scores[idx[i]];
        while i < idx.len() && scores[idx[i]] == s {
            seen += 1.0;
            if labels[idx[i]] == 1 {
                tp += 1.0;
            }
            i += 1;
        }
        let recall = tp / npos;
        ap += (recall - prev_recall) * (tp / seen);
        prev_recall = recall;
    }
    ap
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator); 0 for a single value.
    pub std: f64,
}

fn mean_std(values: &[f64]) -> Option<MeanStd> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some(MeanStd { mean, std })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub folds: usize,
    pub accuracy: MeanStd,
    pub f1: MeanStd,
    pub mcc: MeanStd,
    /// Over the folds where the value is defined.
    pub auroc: Option<MeanStd>,
    pub auprc: Option<MeanStd>,
}

impl AggregateReport {
    pub const CSV_HEADER: &'static str =
        "folds,accuracy_mean,accuracy_std,f1_mean,f1_std,mcc_mean,mcc_std,auroc_mean,auroc_std,auprc_mean,auprc_std";

    pub fn csv_row(&self) -> String {
        let pair = |m: Option<MeanStd>| {
            m.map_or_else(|| "NA,NA".to_string(), |m| format!("{},{}", m.mean, m.std))
        };
        format!(
            "{},{},{},{},{},{}",
            self.folds,
            pair(Some(self.accuracy)),
            pair(Some(self.f1)),
            pair(Some(self.mcc)),
            pair(self.auroc),
            pair(self.auprc)
        )
    }
}

pub fn aggregate_folds(reports: &[MetricsReport]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::invalid("no reports to aggregate"));
    }
    let get = |f: fn(&MetricsReport) -> f64| mean_std(&reports.iter().map(f).collect::<Vec<_>>()).unwrap();
    let opt = |f: fn(&MetricsReport) -> Option<f64>| mean_std(&reports.iter().filter_map(f).collect::<Vec<_>>());
    Ok(AggregateReport {
        folds: reports.len(),
        accuracy: get(|r| r.accuracy),
        f1: get(|r| r.f1),
        mcc: get(|r| r.mcc),
        auroc: opt(|r| r.auroc),
        auprc: opt(|r| r.auprc),
    })
}
