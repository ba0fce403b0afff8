//! Nyström kernel layer over motif-position pairs.
//!
//! Anchors `z_1..z_n` span a subspace of the kernel's feature space; every
//! input window is mapped to `ψ(y) = K_ZZ^{-1/2} K_Z(y)`, so that
//! `ψ(y)ᵀψ(y')` is the projection of `K₀(y, y')` onto that span.

mod anchors;
mod kmeans;
mod layer;
mod linalg;

pub use anchors::{
    compute_kzz, init_anchors, project_to_anchor, sample_pairs, AnchorFile, AnchorSet, InitOptions,
    DEFAULT_EPS_REL,
};
pub use kmeans::{kmeans_pp, KMeansResult};
pub use layer::{anchor_kernel, layer_backward, layer_forward, window_matrices, LayerGrad, LayerOutput};
pub use linalg::{inv_sqrt_psd, InvSqrt};
