use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dense::{DenseFile, DenseLayer};
use super::loss::sigmoid;
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::nystroem::{layer_forward, AnchorFile, AnchorSet, LayerOutput};
use crate::seqdata::{Alphabet, EncodedSequence};

pub const FORMAT_VERSION: u64 = 1;

/// Output layer convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// One logit per class.
    Softmax,
    /// A single logit for class 1 of a binary problem.
    SingleLogit,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub config_hash: String,
}

/// Kernel layer plus linear dense head.
#[derive(Debug, Clone)]
pub struct CmknModel {
    pub alphabet: Alphabet,
    pub params: KernelParams,
    pub sequence_length: usize,
    pub anchors: AnchorSet,
    pub layers: Vec<DenseLayer>,
    pub head: Head,
    pub class_names: Vec<String>,
    pub meta: TrainingMeta,
}

impl CmknModel {
    /// Checks layer dimensions and computes the anchors' `K_ZZ^{-1/2}`.
    pub fn new(
        alphabet: Alphabet,
        params: KernelParams,
        sequence_length: usize,
        mut anchors: AnchorSet,
        layers: Vec<DenseLayer>,
        head: Head,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if sequence_length < params.k {
            return Err(Error::invalid(format!(
                "sequence length {sequence_length} is shorter than k={}",
                params.k
            )));
        }
        if anchors.alphabet_size() != alphabet.len() || anchors.k() != params.k {
            return Err(Error::invalid("anchors do not match the alphabet or motif length"));
        }
        if layers.is_empty() {
            return Err(Error::invalid("at least one dense layer is required"));
        }
        let mut width = anchors.len() * (sequence_length - params.k + 1);
        for (i, l) in layers.iter().enumerate() {
            if l.inputs() != width {
                return Err(Error::invalid(format!(
                    "dense layer {i} expects {} inputs, previous width is {width}",
                    l.inputs()
                )));
            }
            width = l.outputs();
        }
        let expected = match head {
            Head::Softmax => class_names.len(),
            Head::SingleLogit => {
                if class_names.len() != 2 {
                    return Err(Error::invalid("a single-logit head needs exactly two classes"));
                }
                1
            }
        };
        if width != expected {
            return Err(Error::invalid(format!("head produces {width} outputs, expected {expected}")));
        }
        anchors.refresh(&params)?;
        Ok(CmknModel {
            alphabet,
            params,
            sequence_length,
            anchors,
            layers,
            head,
            class_names,
            meta: TrainingMeta::default(),
        })
    }

    /// Valid window positions per input, `P = L − k + 1`.
    pub fn num_positions(&self) -> usize {
        self.sequence_length - self.params.k + 1
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub(crate) fn check_input(&self, x: &EncodedSequence) -> Result<()> {
        if x.len() != self.sequence_length {
            return Err(Error::invalid(format!(
                "sequence '{}' has length {}, model expects {}",
                x.id,
                x.len(),
                self.sequence_length
            )));
        }
        if x.alphabet_size() != self.alphabet.len() {
            return Err(Error::invalid("sequence alphabet differs from the model's"));
        }
        Ok(())
    }

    pub fn kernel_layer(&self, x: &EncodedSequence) -> Result<LayerOutput> {
        self.check_input(x)?;
        layer_forward(x, &self.anchors, &self.params)
    }

    /// Dense stack applied to an anchor-major flattened kernel-layer output.
    pub fn head_forward(&self, flat: Vec<f64>) -> DVector<f64> {
        self.layers
            .iter()
            .fold(DVector::from_vec(flat), |h, l| l.forward(&h))
    }

    /// Class probabilities from logits.
    pub fn probabilities(&self, logits: &[f64]) -> Vec<f64> {
        match self.head {
            Head::SingleLogit => {
                let p = sigmoid(logits[0]);
                vec![1.0 - p, p]
            }
            Head::Softmax => {
                let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
                let s: f64 = e.iter().sum();
                e.iter().map(|v| v / s).collect()
            }
        }
    }

    pub fn predicted_class(&self, logits: &[f64]) -> usize {
        match self.head {
            Head::SingleLogit => usize::from(logits[0] >= 0.0),
            Head::Softmax => argmax(logits),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            alphabet: self.alphabet.clone(),
            kernel_params: self.params,
            sequence_length: self.sequence_length,
            head: self.head,
            anchors: self.anchors.to_file(&self.params),
            dense_layers: self.layers.iter().map(DenseLayer::to_file).collect(),
            class_names: self.class_names.clone(),
            kzz_digest: self.anchors.kzz_digest(&self.params)?,
            training_meta: self.meta.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if let Some(found) = value.get("format_version").and_then(|v| v.as_u64()) {
            if found != FORMAT_VERSION {
                return Err(Error::Version {
                    found,
                    expected: FORMAT_VERSION,
                });
            }
        }
        let file: ModelFile = serde_json::from_value(value)?;
        if file.anchors.params != file.kernel_params {
            return Err(Error::invalid("anchor parameters differ from the model's kernel parameters"));
        }
        let anchors = AnchorSet::from_file(&file.anchors)?;
        let layers = file
            .dense_layers
            .iter()
            .map(DenseLayer::from_file)
            .collect::<Result<Vec<_>>>()?;
        let mut model = CmknModel::new(
            file.alphabet,
            file.kernel_params,
            file.sequence_length,
            anchors,
            layers,
            file.head,
            file.class_names,
        )?;
        let computed = model.anchors.kzz_digest(&model.params)?;
        if computed != file.kzz_digest {
            return Err(Error::Digest {
                stored: file.kzz_digest,
                computed,
            });
        }
        model.meta = file.training_meta;
        Ok(model)
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u64,
    alphabet: Alphabet,
    kernel_params: KernelParams,
    sequence_length: usize,
    head: Head,
    anchors: AnchorFile,
    dense_layers: Vec<DenseFile>,
    class_names: Vec<String>,
    kzz_digest: String,
    training_meta: TrainingMeta,
}

/// Logits of one sequence.
pub fn model_forward(model: &CmknModel, x: &EncodedSequence) -> Result<Vec<f64>> {
    let out = model.kernel_layer(x)?;
    Ok(model.head_forward(out.flattened()).iter().copied().collect())
}

/// Class probabilities of one sequence.
pub fn predict(model: &CmknModel, x: &EncodedSequence) -> Result<Vec<f64>> {
    Ok(model.probabilities(&model_forward(model, x)?))
}

pub fn predict_batch(model: &CmknModel, xs: &[EncodedSequence]) -> Result<Vec<Vec<f64>>> {
    xs.par_iter().map(|x| predict(model, x)).collect()
}

pub fn save_model(model: &CmknModel, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_json()?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<CmknModel> {
    CmknModel::from_json(&std::fs::read_to_string(path)?)
}
