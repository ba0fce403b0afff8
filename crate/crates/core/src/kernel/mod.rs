//! The position-aware motif kernel.
//!
//! Motif-position pairs `(ω, p̃)` are compared with
//!
//! ```text
//! K₀((ω,p̃),(ω',q̃)) = exp( α(ωᵀω' − k) + β/(2σ²)(p̃ᵀq̃ − 1) )
//! ```
//!
//! and sequences with `C · Σ_p Σ_q K₀` over all valid windows, where
//! `C = sqrt(π²σ²/(2αβ))`.

mod gram;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqdata::{map_position, CirclePoint, EncodedSequence};

pub use gram::{gram, gram_tiled, write_gram_csv, write_gram_svm, DEFAULT_TILE};

/// Kernel hyperparameters, validated on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct KernelParams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
}

#[derive(Deserialize)]
struct RawParams {
    k: usize,
    alpha: f64,
    beta: f64,
    sigma: f64,
}

impl TryFrom<RawParams> for KernelParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        KernelParams::new(r.k, r.alpha, r.beta, r.sigma)
    }
}

impl KernelParams {
    pub fn new(k: usize, alpha: f64, beta: f64, sigma: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("motif length k must be >= 1"));
        }
        for (name, v) in [("alpha", alpha), ("beta", beta), ("sigma", sigma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(KernelParams { k, alpha, beta, sigma })
    }

    /// `β / (2σ²)`, the coefficient of the position term.
    pub fn position_scale(&self) -> f64 {
        self.beta / (2.0 * self.sigma * self.sigma)
    }
}

/// A flattened nPFM paired with a circle-mapped position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifPositionPair {
    pub motif: Vec<f64>,
    pub position: CirclePoint,
}

impl MotifPositionPair {
    pub fn new(motif: Vec<f64>, position: CirclePoint) -> Self {
        MotifPositionPair { motif, position }
    }

    /// Window `p` (1-based) of `seq` with its mapped position.
    pub fn from_window(seq: &EncodedSequence, p: usize, k: usize) -> Result<Self> {
        let w = seq.window(p, k)?;
        Ok(MotifPositionPair {
            motif: w.to_vec(),
            position: map_position(p, seq.len())?,
        })
    }

    /// Checks nonnegativity, unit columns and the position's circle constraints.
    pub fn is_valid(&self, alphabet_size: usize, tol: f64) -> bool {
        let cols_ok = self.motif.len() % alphabet_size == 0
            && self.motif.iter().all(|&v| v >= -tol)
            && self
                .motif
                .chunks(alphabet_size)
                .all(|c| (c.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() <= tol);
        let p = &self.position;
        cols_ok && p.y >= -tol && (p.dot(p) - 1.0).abs() <= tol
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `exp(β/(2σ²)(p̃ᵀq̃ − 1))`.
pub fn k_position(p: &CirclePoint, q: &CirclePoint, params: &KernelParams) -> f64 {
    (params.position_scale() * (p.dot(q) - 1.0)).exp()
}

/// `exp(α(wᵀv − k))` on flattened nPFMs.
pub fn k_npfm(w: &[f64], v: &[f64], params: &KernelParams) -> f64 {
    (params.alpha * (dot(w, v) - params.k as f64)).exp()
}

/// K₀ from raw parts, with both exponents fused into one `exp`.
#[inline]
pub fn k0_parts(w: &[f64], p: &CirclePoint, v: &[f64], q: &CirclePoint, params: &KernelParams) -> f64 {
    (params.alpha * (dot(w, v) - params.k as f64) + params.position_scale() * (p.dot(q) - 1.0)).exp()
}

/// Product of the motif and position kernels.
pub fn k0(z: &MotifPositionPair, y: &MotifPositionPair, params: &KernelParams) -> f64 {
    k0_parts(&z.motif, &z.position, &y.motif, &y.position, params)
}

/// `C = sqrt(π²σ² / (2αβ))`.
pub fn pam_constant(params: &KernelParams) -> f64 {
    (PI * PI * params.sigma * params.sigma / (2.0 * params.alpha * params.beta)).sqrt()
}

/// `L² / 10`, the position scale matched to the oligo kernel's Gaussian.
pub fn default_beta(len: usize) -> f64 {
    let l = len as f64;
    l * l / 10.0
}

/// Valid windows of `seq` and their mapped positions.
pub(crate) fn windows_of<'a>(
    seq: &'a EncodedSequence,
    k: usize,
) -> Result<Vec<(&'a [f64], CirclePoint)>> {
    let n = seq.num_windows(k);
    if n == 0 {
        return Err(Error::invalid(format!(
            "sequence '{}' of length {} is shorter than k={k}",
            seq.id,
            seq.len()
        )));
    }
    (1..=n)
        .map(|p| Ok((seq.window(p, k)?, map_position(p, seq.len())?)))
        .collect()
}

/// Position-aware motif kernel between two sequences.
pub fn k_pam(x: &EncodedSequence, y: &EncodedSequence, params: &KernelParams) -> Result<f64> {
    if x.alphabet_size() != y.alphabet_size() {
        return Err(Error::invalid("sequences use different alphabets"));
    }
    let wx = windows_of(x, params.k)?;
    let wy = windows_of(y, params.k)?;
    Ok(pam_constant(params) * pam_sum(&wx, &wy, params))
}

pub(crate) fn pam_sum(
    wx: &[(&[f64], CirclePoint)],
    wy: &[(&[f64], CirclePoint)],
    params: &KernelParams,
) -> f64 {
    let mut s = 0.0;
    for (w, p) in wx {
        for (v, q) in wy {
            s += k0_parts(w, p, v, q, params);
        }
    }
    s
}

/// Motif function `φ_x(χ, t) = Σ_p exp(−α‖χ − ω_p‖² − β/(2σ²)‖t − p̃‖²)`.
pub fn motif_function_eval(
    x: &EncodedSequence,
    chi: &[f64],
    t: [f64; 2],
    params: &KernelParams,
) -> Result<f64> {
    let ws = windows_of(x, params.k)?;
    if chi.len() != x.alphabet_size() * params.k {
        return Err(Error::invalid(format!(
            "motif argument has length {}, expected {}",
            chi.len(),
            x.alphabet_size() * params.k
        )));
    }
    let g = params.position_scale();
    Ok(ws
        .iter()
        .map(|(w, p)| {
            let dm: f64 = chi.iter().zip(w.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            let dp = (t[0] - p.x).powi(2) + (t[1] - p.y).powi(2);
            (-params.alpha * dm - g * dp).exp()
        })
        .sum())
}

/// `(−½‖a−b‖², aᵀb − k)`; equal whenever both are nPFMs with `k` columns.
pub fn linearization_identity_check(a: &[f64], b: &[f64], k: usize) -> (f64, f64) {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-0.5 * sq, dot(a, b) - k as f64)
}
