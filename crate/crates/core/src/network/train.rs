use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dense::{Activation, DenseLayer};
use super::loss::{class_balanced_weights, loss, LossKind};
use super::model::{CmknModel, Head};
use super::optim::{Adam, PlateauConfig, ReduceLrOnPlateau};
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::nystroem::{init_anchors, layer_backward, InitOptions, LayerGrad, LayerOutput};
use crate::rng::{seeded, stream};
use crate::seqdata::{EncodedSequence, LabeledDataset};

/// Samples per task when reducing kernel-layer gradients; fixed so the
/// summation order does not depend on the thread count.
const REDUCE_CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub num_anchors: usize,
    /// Hidden layer widths between the kernel layer and the output.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub init: InitOptions,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            num_anchors: 50,
            hidden: vec![200],
            activation: Activation::Identity,
            init: InitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub schedule: PlateauConfig,
    pub loss: LossKind,
    pub cb_beta: f64,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub freeze_positions: bool,
    /// Treat `K_ZZ^{-1/2}` as a constant in the backward pass.
    pub detach_inv_sqrt: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            lr: 0.1,
            schedule: PlateauConfig::default(),
            loss: LossKind::ClassBalancedCe,
            cb_beta: 0.999,
            batch_size: None,
            seed: 0,
            freeze_positions: false,
            detach_inv_sqrt: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::invalid("learning rate must be finite and >= 0"));
        }
        let s = &self.schedule;
        if !(s.factor > 0.0 && s.factor < 1.0) {
            return Err(Error::invalid("schedule factor must be in (0, 1)"));
        }
        if !(s.min_lr >= 0.0 && s.threshold >= 0.0) {
            return Err(Error::invalid("min_lr and threshold must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.cb_beta) {
            return Err(Error::invalid("cb_beta must be in [0, 1)"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::invalid("batch size must be >= 1"));
        }
        Ok(())
    }

    pub fn head(&self) -> Head {
        match self.loss {
            LossKind::BceLogits => Head::SingleLogit,
            LossKind::ClassBalancedCe => Head::Softmax,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub lr: f64,
    /// Training accuracy accumulated over the epoch's batches.
    pub accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainingHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,lr,accuracy\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{},{}\n", r.epoch, r.loss, r.lr, r.accuracy));
        }
        out
    }
}

/// Gradients of every trainable parameter.
#[derive(Debug, Clone)]
pub struct ModelGrad {
    pub dense: Vec<(DMatrix<f64>, DVector<f64>)>,
    pub anchors: LayerGrad,
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    /// `Σ w_i ℓ_i / Σ w_i` over the batch.
    pub loss: f64,
    pub weight_sum: f64,
    pub correct: usize,
    pub grad: ModelGrad,
}

/// Loss and exact gradients of a batch.
pub fn batch_gradient(
    model: &CmknModel,
    seqs: &[&EncodedSequence],
    labels: &[usize],
    class_weights: &[f64],
    kind: LossKind,
    detach_inv_sqrt: bool,
) -> Result<BatchResult> {
    if seqs.is_empty() || seqs.len() != labels.len() {
        return Err(Error::invalid("batch needs matching nonempty sequences and labels"));
    }
    let b = seqs.len();
    let outputs: Vec<LayerOutput> = seqs
        .par_iter()
        .map(|x| model.kernel_layer(x))
        .collect::<Result<_>>()?;
    let width = outputs[0].features.len();
    let p = model.num_positions();
    let mut input = DMatrix::zeros(width, b);
    for (j, out) in outputs.iter().enumerate() {
        input.column_mut(j).copy_from_slice(&out.flattened());
    }
    let mut acts = vec![input];
    for l in &model.layers {
        let next = l.forward_batch(acts.last().unwrap());
        acts.push(next);
    }
    let logits = acts.last().unwrap();

    let mut delta = DMatrix::zeros(logits.nrows(), b);
    let (mut total, mut weight_sum, mut correct) = (0.0, 0.0, 0usize);
    for j in 0..b {
        let z: Vec<f64> = logits.column(j).iter().copied().collect();
        let (v, g) = loss(kind, &z, labels[j], class_weights)?;
        total += v;
        weight_sum += class_weights[labels[j]];
        delta.column_mut(j).copy_from_slice(&g);
        if model.predicted_class(&z) == labels[j] {
            correct += 1;
        }
    }
    if weight_sum <= 0.0 {
        return Err(Error::invalid("batch has zero total class weight"));
    }
    delta /= weight_sum;

    let mut dense = Vec::with_capacity(model.layers.len());
    for (l, layer) in model.layers.iter().enumerate().rev() {
        let dw = &delta * acts[l].transpose();
        let db = DVector::from_fn(delta.nrows(), |i, _| delta.row(i).iter().sum());
        delta = layer.weights.transpose() * &delta;
        dense.push((dw, db));
    }
    dense.reverse();

    let n = model.anchors.len();
    let partial: Vec<Result<LayerGrad>> = outputs
        .par_chunks(REDUCE_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut g = LayerGrad::for_anchors(&model.anchors);
            for (o, out) in chunk.iter().enumerate() {
                let col = delta.column(c * REDUCE_CHUNK + o);
                let up = DMatrix::from_fn(n, p, |i, q| col[i * p + q]);
                layer_backward(out, &model.anchors, &model.params, &up, &mut g)?;
            }
            Ok(g)
        })
        .collect();
    let mut anchor_grad = LayerGrad::for_anchors(&model.anchors);
    for g in partial {
        anchor_grad.add(&g?);
    }
    let anchors = anchor_grad.finalize(&model.anchors, &model.params, detach_inv_sqrt)?;
    Ok(BatchResult {
        loss: total / weight_sum,
        weight_sum,
        correct,
        grad: ModelGrad { dense, anchors },
    })
}

/// Builds a model with k-means++ anchors and uniformly initialized dense layers.
pub fn init_model(
    ds: &LabeledDataset,
    params: &KernelParams,
    model_cfg: &ModelConfig,
    head: Head,
    seed: u64,
) -> Result<CmknModel> {
    let len = ds
        .uniform_length()
        .ok_or_else(|| Error::invalid("training sequences must share one length"))?;
    if len < params.k {
        return Err(Error::invalid(format!("sequence length {len} is shorter than k={}", params.k)));
    }
    if model_cfg.hidden.contains(&0) {
        return Err(Error::invalid("hidden layer widths must be >= 1"));
    }
    let anchors = init_anchors(
        ds,
        model_cfg.num_anchors,
        params,
        &model_cfg.init,
        &mut seeded(seed, stream::ANCHORS),
    )?;
    let outputs = match head {
        Head::Softmax => ds.num_classes(),
        Head::SingleLogit => 1,
    };
    let mut dims = vec![model_cfg.num_anchors * (len - params.k + 1)];
    dims.extend(&model_cfg.hidden);
    dims.push(outputs);
    let mut rng = seeded(seed, stream::DENSE_INIT);
    let layers = dims
        .windows(2)
        .map(|w| {
            let mut l = DenseLayer::init(w[0], w[1], &mut rng);
            l.activation = model_cfg.activation;
            l
        })
        .collect();
    CmknModel::new(
        ds.alphabet.clone(),
        *params,
        len,
        anchors,
        layers,
        head,
        ds.class_names.clone(),
    )
}

/// Initializes and trains a model on a labeled dataset.
pub fn train(
    ds: &LabeledDataset,
    params: &KernelParams,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<(CmknModel, TrainingHistory)> {
    cfg.validate()?;
    if cfg.loss == LossKind::BceLogits && ds.num_classes() != 2 {
        return Err(Error::invalid("binary cross-entropy needs exactly two classes"));
    }
    let mut model = init_model(ds, params, model_cfg, cfg.head(), cfg.seed)?;
    let mut h = Sha256::new();
    h.update(serde_json::to_string(&(params, model_cfg, cfg))?.as_bytes());
    model.meta.config_hash = hex::encode(h.finalize());
    let history = train_model(&mut model, ds, cfg)?;
    Ok((model, history))
}

/// Continues training `model` in place.
///
/// Each step back-propagates through the dense head and the kernel layer,
/// applies Adam, projects the anchors back onto their constraints and
/// recomputes `K_ZZ^{-1/2}`.
pub fn train_model(model: &mut CmknModel, ds: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainingHistory> {
    cfg.validate()?;
    let labels = ds.labels()?;
    if labels.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let weights = class_balanced_weights(&ds.class_counts(), cfg.cb_beta)?;
    let mut slots: Vec<usize> = model
        .layers
        .iter()
        .flat_map(|l| [l.weights.len(), l.bias.len()])
        .collect();
    slots.push(model.anchors.motifs().len());
    slots.push(model.anchors.positions().len());
    let mut adam = Adam::new(&slots);
    let mut schedule = ReduceLrOnPlateau::new(cfg.lr, cfg.schedule);
    let mut shuffle_rng = seeded(cfg.seed, stream::SHUFFLE);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let batch = cfg.batch_size.unwrap_or(ds.len()).min(ds.len());
    let mut history = TrainingHistory::default();

    for epoch in 1..=cfg.epochs {
        let lr = schedule.lr();
        if batch < ds.len() {
            order.shuffle(&mut shuffle_rng);
        }
        let (mut loss_sum, mut weight_sum, mut correct) = (0.0, 0.0, 0usize);
        for idx in order.chunks(batch) {
            let seqs: Vec<&EncodedSequence> = idx.iter().map(|&i| &ds.sequences[i]).collect();
            let ys: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            let r = batch_gradient(model, &seqs, &ys, &weights, cfg.loss, cfg.detach_inv_sqrt)?;
            if !r.loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "loss became {} in epoch {epoch} (lr {lr})",
                    r.loss
                )));
            }
            loss_sum += r.loss * r.weight_sum;
            weight_sum += r.weight_sum;
            correct += r.correct;
            apply_step(model, &mut adam, &r.grad, lr, cfg.freeze_positions)?;
        }
        let epoch_loss = loss_sum / weight_sum;
        history.records.push(EpochRecord {
            epoch,
            loss: epoch_loss,
            lr,
            accuracy: correct as f64 / ds.len() as f64,
        });
        log::debug!("epoch {epoch}: loss {epoch_loss:.6} lr {lr:e}");
        schedule.step(epoch_loss);
    }
    model.meta.seed = cfg.seed;
    model.meta.epochs += cfg.epochs;
    Ok(history)
}

fn apply_step(model: &mut CmknModel, adam: &mut Adam, grad: &ModelGrad, lr: f64, freeze_positions: bool) -> Result<()> {
    adam.begin_step();
    let mut slot = 0;
    for (layer, (dw, db)) in model.layers.iter_mut().zip(&grad.dense) {
        adam.update(slot, layer.weights.as_mut_slice(), dw.as_slice(), lr);
        adam.update(slot + 1, layer.bias.as_mut_slice(), db.as_slice(), lr);
        slot += 2;
    }
    adam.update(slot, model.anchors.motifs_mut().as_mut_slice(), grad.anchors.motifs.as_slice(), lr);
    if !freeze_positions {
        adam.update(
            slot + 1,
            model.anchors.positions_mut().as_mut_slice(),
            grad.anchors.positions.as_slice(),
            lr,
        );
    }
    model.anchors.project();
    model.anchors.refresh(&model.params).map_err(|e| match e {
        Error::Numerical(m) => Error::Numerical(format!("anchor update failed: {m}")),
        other => other,
    })
}
