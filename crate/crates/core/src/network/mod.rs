//! Linear dense head, losses, optimizer and training of the full network.

mod dense;
mod loss;
mod model;
mod optim;
mod train;

pub use dense::{Activation, DenseLayer};
pub use loss::{bce_with_logits, class_balanced_weights, loss, sigmoid, softmax_cross_entropy, LossKind};
pub use model::{
    load_model, model_forward, predict, predict_batch, save_model, CmknModel, Head, TrainingMeta,
    FORMAT_VERSION,
};
pub use optim::{Adam, PlateauConfig, ReduceLrOnPlateau};
pub use train::{
    batch_gradient, init_model, train, train_model, BatchResult, EpochRecord, ModelConfig, ModelGrad,
    TrainConfig, TrainingHistory,
};
