use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{detect_peaks, mean_motif_at, position_importance};
use crate::error::Result;
use crate::network::CmknModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub position: usize,
    pub score: f64,
    /// Mean motif columns (`|A|` entries each); `None` if no anchor contributes.
    pub mean_motif: Option<Vec<Vec<f64>>>,
    pub consensus: Option<String>,
    /// Two highest-weighted letters per motif column.
    pub top_letters: Vec<Vec<(char, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: usize,
    pub importance: Vec<f64>,
    pub normalized: Vec<f64>,
    pub peaks: Vec<PeakReport>,
}

/// Per-class importances and annotated peaks, keyed by class name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalReport {
    pub classes: BTreeMap<String, ClassReport>,
}

impl GlobalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.classes)?)
    }

    /// One row per (class, position); peak columns empty for non-peaks.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,position,importance,normalized,peak_rank,peak_score,consensus\n");
        for (name, c) in &self.classes {
            for (i, (imp, norm)) in c.importance.iter().zip(&c.normalized).enumerate() {
                let pos = i + 1;
                let peak = c.peaks.iter().enumerate().find(|(_, p)| p.position == pos);
                let (rank, score, cons) = match peak {
                    Some((r, p)) => (
                        (r + 1).to_string(),
                        p.score.to_string(),
                        p.consensus.clone().unwrap_or_default(),
                    ),
                    None => (String::new(), String::new(), String::new()),
                };
                out.push_str(&format!("{name},{pos},{imp},{norm},{rank},{score},{cons}\n"));
            }
        }
        out
    }
}

pub fn global_report(model: &CmknModel, window: usize, top: usize) -> Result<GlobalReport> {
    let mut classes = BTreeMap::new();
    for (c, name) in model.class_names.iter().enumerate() {
        let imp = position_importance(model, c)?;
        let len = imp.importance.len();
        let widest = if len % 2 == 1 { len } else { len - 1 };
        let window = window.min(widest);
        let peaks = detect_peaks(&imp.importance, window, top)?
            .into_iter()
            .map(|pk| {
                let mm = mean_motif_at(model, pk.position, c)?;
                let (mean_motif, consensus, top_letters) = match &mm.npfm {
                    Some(m) => (
                        Some((0..m.k()).map(|j| m.column(j).to_vec()).collect()),
                        Some(m.consensus(&model.alphabet)),
                        (0..m.k())
                            .map(|j| m.ranked_letters(j, &model.alphabet).into_iter().take(2).collect())
                            .collect(),
                    ),
                    None => (None, None, Vec::new()),
                };
                Ok(PeakReport {
                    position: pk.position,
                    score: pk.score,
                    mean_motif,
                    consensus,
                    top_letters,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        classes.insert(
            name.clone(),
            ClassReport {
                class: c,
                importance: imp.importance,
                normalized: imp.normalized,
                peaks,
            },
        );
    }
    Ok(GlobalReport { classes })
}
