use nalgebra::DMatrix;

use super::anchors::AnchorSet;
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::seqdata::{map_position, EncodedSequence};

/// Kernel-layer activations of one sequence plus what the backward pass needs.
#[derive(Debug, Clone)]
pub struct LayerOutput {
    /// `n × P`; column `p` is `K_ZZ^{-1/2} K_Z(ω_p, p̃)`.
    pub features: DMatrix<f64>,
    /// `n × P` raw kernel values `K₀(z_i, (ω_p, p̃))`.
    pub kz: DMatrix<f64>,
    /// `|A|k × P`, one flattened window per column.
    pub windows: DMatrix<f64>,
    /// `2 × P` circle points.
    pub positions: DMatrix<f64>,
}

impl LayerOutput {
    pub fn num_positions(&self) -> usize {
        self.features.ncols()
    }

    /// Anchor-major flattening: entry `i * P + p`.
    pub fn flattened(&self) -> Vec<f64> {
        let (n, p) = self.features.shape();
        let mut out = Vec::with_capacity(n * p);
        for i in 0..n {
            out.extend(self.features.row(i).iter());
        }
        out
    }
}

/// Window and position matrices of a sequence.
pub fn window_matrices(x: &EncodedSequence, k: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let l = x.len();
    if l < k {
        return Err(Error::invalid(format!("sequence of length {l} is shorter than k={k}")));
    }
    let p = l - k + 1;
    let a = x.alphabet_size();
    let data = x.matrix();
    let windows = DMatrix::from_fn(a * k, p, |r, c| data[c * a + r]);
    let mut positions = DMatrix::zeros(2, p);
    for c in 0..p {
        let pt = map_position(c + 1, l)?;
        positions[(0, c)] = pt.x;
        positions[(1, c)] = pt.y;
    }
    Ok((windows, positions))
}

/// `K_Z` between anchors and precomputed window/position matrices.
pub fn anchor_kernel(
    anchors: &AnchorSet,
    windows: &DMatrix<f64>,
    positions: &DMatrix<f64>,
    params: &KernelParams,
) -> DMatrix<f64> {
    let s = anchors.motifs() * windows;
    let t = anchors.positions() * positions;
    let (a, g, k) = (params.alpha, params.position_scale(), params.k as f64);
    s.zip_map(&t, |s, t| (a * (s - k) + g * (t - 1.0)).exp())
}

/// `ψ = K_ZZ^{-1/2} K_Z` at every valid window of `x`.
///
/// Fails with a contract error if the anchors changed since the last refresh.
pub fn layer_forward(x: &EncodedSequence, anchors: &AnchorSet, params: &KernelParams) -> Result<LayerOutput> {
    if x.alphabet_size() != anchors.alphabet_size() {
        return Err(Error::invalid("sequence alphabet differs from the anchors'"));
    }
    let inv = anchors.inv_sqrt(params)?;
    let (windows, positions) = window_matrices(x, params.k)?;
    let kz = anchor_kernel(anchors, &windows, &positions, params);
    let features = inv * &kz;
    Ok(LayerOutput {
        features,
        kz,
        windows,
        positions,
    })
}

/// Gradient buffers for one kernel layer, summed over a batch.
#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub motifs: DMatrix<f64>,
    pub positions: DMatrix<f64>,
    /// Gradient with respect to `K_ZZ^{-1/2}`; folded in by [`LayerGrad::finalize`].
    pub inv_sqrt: DMatrix<f64>,
}

impl LayerGrad {
    pub fn zeros(n: usize, dim: usize) -> Self {
        LayerGrad {
            motifs: DMatrix::zeros(n, dim),
            positions: DMatrix::zeros(n, 2),
            inv_sqrt: DMatrix::zeros(n, n),
        }
    }

    pub fn for_anchors(anchors: &AnchorSet) -> Self {
        Self::zeros(anchors.len(), anchors.motifs().ncols())
    }

    pub fn add(&mut self, other: &LayerGrad) {
        self.motifs += &other.motifs;
        self.positions += &other.positions;
        self.inv_sqrt += &other.inv_sqrt;
    }

    /// Pulls the accumulated `K_ZZ^{-1/2}` gradient through the eigendecomposition
    /// into the anchors. With `detach` it is dropped instead.
    pub fn finalize(mut self, anchors: &AnchorSet, params: &KernelParams, detach: bool) -> Result<LayerGrad> {
        if !detach {
            let dec = anchors.inv_sqrt_decomposition(params)?;
            let dkzz = dec.backward(&self.inv_sqrt);
            let kzz = anchors.kzz(params)?;
            let h = dkzz.component_mul(kzz);
            let hs = &h + h.transpose();
            self.motifs += (&hs * anchors.motifs()) * params.alpha;
            self.positions += (&hs * anchors.positions()) * params.position_scale();
        }
        self.inv_sqrt.fill(0.0);
        Ok(self)
    }
}

/// Accumulates the gradient of a scalar loss given `upstream = ∂loss/∂features`.
///
/// Adds the direct `K_Z` path into `grad.motifs` / `grad.positions` and the
/// `K_ZZ^{-1/2}` path into `grad.inv_sqrt`; call [`LayerGrad::finalize`] once
/// per batch.
pub fn layer_backward(
    out: &LayerOutput,
    anchors: &AnchorSet,
    params: &KernelParams,
    upstream: &DMatrix<f64>,
    grad: &mut LayerGrad,
) -> Result<()> {
    if upstream.shape() != out.features.shape() {
        return Err(Error::invalid("upstream gradient shape differs from the layer output"));
    }
    let inv = anchors.inv_sqrt(params)?;
    grad.inv_sqrt += upstream * out.kz.transpose();
    let dk = inv * upstream;
    let h = dk.component_mul(&out.kz);
    grad.motifs += (&h * out.windows.transpose()) * params.alpha;
    grad.positions += (&h * out.positions.transpose()) * params.position_scale();
    Ok(())
}
