//! Convolutional motif kernel networks.
//!
//! A sequence classifier whose first layer projects every motif-position
//! pair of the input onto the span of learned anchor pairs in the feature
//! space of the position-aware motif kernel, followed by linear dense
//! layers. Because the head is linear and every kernel-layer neuron is tied
//! to an anchor motif and position, the trained model can be read directly:
//! per-class position importances, mean motifs, and per-input reports.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`seqdata`] | alphabets, encoding, nPFMs, FASTA/HIVdb, synthetic data, folds |
//! | [`kernel`] | position, motif and sequence kernels, Gram matrices, motif functions |
//! | [`nystroem`] | anchors, k-means++, K_ZZ^{-1/2} and the kernel layer with gradients |
//! | [`network`] | dense head, losses, Adam, LR schedule, training, model files |
//! | [`metrics`] | accuracy, F1, MCC, auROC, auPRC and fold aggregation |
//! | [`interpret`] | position importance, peaks, mean motifs, local reports, logos |

pub mod error;
pub mod interpret;
pub mod kernel;
pub mod metrics;
pub mod network;
pub mod nystroem;
pub mod rng;
pub mod seqdata;

pub use error::{Error, Result};
