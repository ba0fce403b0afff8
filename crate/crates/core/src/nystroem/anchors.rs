use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::kmeans::kmeans_pp;
use super::linalg::InvSqrt;
use crate::error::{Error, Result};
use crate::kernel::{KernelParams, MotifPositionPair};
use crate::seqdata::{map_position, normalize_columns, CirclePoint, LabeledDataset};

/// Default eigenvalue floor relative to the largest eigenvalue of K_ZZ.
pub const DEFAULT_EPS_REL: f64 = 1e-6;

#[derive(Debug, Clone)]
struct Cache {
    version: u64,
    params: KernelParams,
    kzz: DMatrix<f64>,
    inv: InvSqrt,
}

/// Learnable motif-position anchor pairs spanning the kernel layer's subspace.
///
/// Row `i` of `motifs` is the flattened nPFM of anchor `i`, row `i` of
/// `positions` its circle point. Any mutable access invalidates the cached
/// `K_ZZ^{-1/2}` until [`AnchorSet::refresh`] is called.
#[derive(Debug, Clone)]
pub struct AnchorSet {
    alphabet_size: usize,
    k: usize,
    motifs: DMatrix<f64>,
    positions: DMatrix<f64>,
    eps_rel: f64,
    version: u64,
    cache: Option<Cache>,
}

impl AnchorSet {
    pub fn new(
        alphabet_size: usize,
        k: usize,
        motifs: DMatrix<f64>,
        positions: DMatrix<f64>,
        eps_rel: f64,
    ) -> Result<Self> {
        let n = motifs.nrows();
        if n == 0 {
            return Err(Error::invalid("anchor set is empty"));
        }
        if motifs.ncols() != alphabet_size * k || positions.shape() != (n, 2) {
            return Err(Error::invalid(format!(
                "anchor shapes {:?}/{:?} do not match n={n}, |A|k={}",
                motifs.shape(),
                positions.shape(),
                alphabet_size * k
            )));
        }
        if !(eps_rel >= 0.0 && eps_rel < 1.0) {
            return Err(Error::invalid("eigenvalue floor must be in [0, 1)"));
        }
        Ok(AnchorSet {
            alphabet_size,
            k,
            motifs,
            positions,
            eps_rel,
            version: 0,
            cache: None,
        })
    }

    /// Anchors from explicit pairs.
    pub fn from_pairs(pairs: &[MotifPositionPair], alphabet_size: usize, k: usize, eps_rel: f64) -> Result<Self> {
        let d = alphabet_size * k;
        if pairs.iter().any(|p| p.motif.len() != d) {
            return Err(Error::invalid("anchor motif length differs from |A|k"));
        }
        let motifs = DMatrix::from_fn(pairs.len(), d, |i, j| pairs[i].motif[j]);
        let positions = DMatrix::from_fn(pairs.len(), 2, |i, j| pairs[i].position.as_array()[j]);
        Self::new(alphabet_size, k, motifs, positions, eps_rel)
    }

    pub fn len(&self) -> usize {
        self.motifs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.motifs.nrows() == 0
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eps_rel(&self) -> f64 {
        self.eps_rel
    }

    pub fn motifs(&self) -> &DMatrix<f64> {
        &self.motifs
    }

    pub fn positions(&self) -> &DMatrix<f64> {
        &self.positions
    }

    pub fn motifs_mut(&mut self) -> &mut DMatrix<f64> {
        self.version += 1;
        &mut self.motifs
    }

    pub fn positions_mut(&mut self) -> &mut DMatrix<f64> {
        self.version += 1;
        &mut self.positions
    }

    pub fn pair(&self, i: usize) -> MotifPositionPair {
        MotifPositionPair::new(
            self.motifs.row(i).iter().copied().collect(),
            CirclePoint::new(self.positions[(i, 0)], self.positions[(i, 1)]),
        )
    }

    /// Re-imposes the nPFM and half-circle constraints on every anchor.
    pub fn project(&mut self) {
        let d = self.alphabet_size * self.k;
        for i in 0..self.len() {
            let mut v: Vec<f64> = self.motifs.row(i).iter().copied().collect();
            v.push(self.positions[(i, 0)]);
            v.push(self.positions[(i, 1)]);
            let p = project_to_anchor(&v, self.alphabet_size);
            for j in 0..d {
                self.motifs[(i, j)] = p.motif[j];
            }
            self.positions[(i, 0)] = p.position.x;
            self.positions[(i, 1)] = p.position.y;
        }
        self.version += 1;
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        (0..self.len()).all(|i| self.pair(i).is_valid(self.alphabet_size, tol))
    }

    /// Recomputes `K_ZZ` and its pseudo-inverse square root for `params`.
    pub fn refresh(&mut self, params: &KernelParams) -> Result<()> {
        if params.k != self.k {
            return Err(Error::invalid(format!(
                "kernel k={} but anchors have k={}",
                params.k, self.k
            )));
        }
        let kzz = compute_kzz(self, params);
        let inv = InvSqrt::new_relative(&kzz, self.eps_rel)?;
        self.cache = Some(Cache {
            version: self.version,
            params: *params,
            kzz,
            inv,
        });
        Ok(())
    }

    fn fresh_cache(&self, params: &KernelParams) -> Result<&Cache> {
        match &self.cache {
            Some(c) if c.version == self.version && c.params == *params => Ok(c),
            Some(_) => Err(Error::Contract(
                "anchors changed since K_ZZ^{-1/2} was computed; call refresh()".into(),
            )),
            None => Err(Error::Contract("K_ZZ^{-1/2} has not been computed".into())),
        }
    }

    pub fn inv_sqrt(&self, params: &KernelParams) -> Result<&DMatrix<f64>> {
        Ok(&self.fresh_cache(params)?.inv.matrix)
    }

    pub(crate) fn inv_sqrt_decomposition(&self, params: &KernelParams) -> Result<&InvSqrt> {
        Ok(&self.fresh_cache(params)?.inv)
    }

    pub fn kzz(&self, params: &KernelParams) -> Result<&DMatrix<f64>> {
        Ok(&self.fresh_cache(params)?.kzz)
    }

    /// SHA-256 over the little-endian bytes of `K_ZZ`.
    pub fn kzz_digest(&self, params: &KernelParams) -> Result<String> {
        let kzz = self.kzz(params)?;
        let mut h = Sha256::new();
        for v in kzz.iter() {
            h.update(v.to_le_bytes());
        }
        Ok(hex::encode(h.finalize()))
    }

    pub(crate) fn to_file(&self, params: &KernelParams) -> AnchorFile {
        AnchorFile {
            alphabet_size: self.alphabet_size,
            k: self.k,
            motifs: self.motifs.row_iter().map(|r| r.iter().copied().collect()).collect(),
            positions: self.positions.row_iter().map(|r| [r[0], r[1]]).collect(),
            epsilon: self.eps_rel,
            params: *params,
        }
    }

    pub(crate) fn from_file(f: &AnchorFile) -> Result<Self> {
        let n = f.motifs.len();
        let d = f.alphabet_size * f.k;
        if f.positions.len() != n || f.motifs.iter().any(|m| m.len() != d) {
            return Err(Error::invalid("anchor arrays have inconsistent shapes"));
        }
        let motifs = DMatrix::from_fn(n, d, |i, j| f.motifs[i][j]);
        let positions = DMatrix::from_fn(n, 2, |i, j| f.positions[i][j]);
        Self::new(f.alphabet_size, f.k, motifs, positions, f.epsilon)
    }
}

/// Serialized anchors; the inverse square root is recomputed on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnchorFile {
    pub alphabet_size: usize,
    pub k: usize,
    pub motifs: Vec<Vec<f64>>,
    pub positions: Vec<[f64; 2]>,
    pub epsilon: f64,
    pub params: KernelParams,
}

/// `K_ZZ[i][j] = K₀(z_i, z_j)`.
pub fn compute_kzz(anchors: &AnchorSet, params: &KernelParams) -> DMatrix<f64> {
    let z = &anchors.motifs;
    let zp = &anchors.positions;
    let s = z * z.transpose();
    let t = zp * zp.transpose();
    let (a, g, k) = (params.alpha, params.position_scale(), params.k as f64);
    let mut m = DMatrix::from_fn(z.nrows(), z.nrows(), |i, j| {
        (a * (s[(i, j)] - k) + g * (t[(i, j)] - 1.0)).exp()
    });
    // exact symmetry regardless of summation order
    for i in 0..m.nrows() {
        for j in i + 1..m.ncols() {
            m[(j, i)] = m[(i, j)];
        }
    }
    m
}

/// Projects a concatenated `[motif ; x, y]` vector onto the anchor constraints.
///
/// Motif: negatives clamped, columns rescaled to unit ℓ2 (zero → uniform).
/// Position: rescaled to unit norm (zero → `(0, 1)`), lower half reflected up.
pub fn project_to_anchor(v: &[f64], alphabet_size: usize) -> MotifPositionPair {
    let d = v.len() - 2;
    let mut motif = v[..d].to_vec();
    normalize_columns(&mut motif, alphabet_size);
    let (x, y) = (v[d], v[d + 1]);
    let norm = (x * x + y * y).sqrt();
    let position = if norm > 0.0 && norm.is_finite() {
        CirclePoint::new(x / norm, (y / norm).abs())
    } else {
        CirclePoint::new(0.0, 1.0)
    };
    MotifPositionPair::new(motif, position)
}

/// Draws `m` motif-position pairs uniformly over all (sequence, valid window) pairs.
pub fn sample_pairs<R: Rng + ?Sized>(
    ds: &LabeledDataset,
    m: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<MotifPositionPair>> {
    if m == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    let cumulative: Vec<usize> = ds
        .sequences
        .iter()
        .scan(0usize, |acc, s| {
            *acc += s.num_windows(k);
            Some(*acc)
        })
        .collect();
    let total = cumulative.last().copied().unwrap_or(0);
    if total == 0 {
        return Err(Error::invalid(format!("no sequence has a window of length {k}")));
    }
    (0..m)
        .map(|_| {
            let r = rng.random_range(0..total);
            let s = cumulative.partition_point(|&c| c <= r);
            let start = if s == 0 { 0 } else { cumulative[s - 1] };
            let seq = &ds.sequences[s];
            let p = r - start + 1;
            Ok(MotifPositionPair::new(
                seq.window(p, k)?.to_vec(),
                map_position(p, seq.len())?,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitOptions {
    /// Number of sampled pairs; defaults to `max(10n, 3000)`.
    pub samples: Option<usize>,
    /// Minimum ratio of samples to anchors.
    pub min_sample_ratio: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub eps_rel: f64,
}

impl Default for InitOptions {
    fn default() -> Self {
        InitOptions {
            samples: None,
            min_sample_ratio: 10,
            max_iter: 100,
            tol: 1e-6,
            eps_rel: DEFAULT_EPS_REL,
        }
    }
}

/// Sample pairs, cluster them with k-means++, project the centers onto the
/// anchor constraints and cache `K_ZZ^{-1/2}`.
pub fn init_anchors<R: Rng + ?Sized>(
    ds: &LabeledDataset,
    n: usize,
    params: &KernelParams,
    opts: &InitOptions,
    rng: &mut R,
) -> Result<AnchorSet> {
    if n == 0 {
        return Err(Error::invalid("need at least one anchor"));
    }
    let m = opts.samples.unwrap_or((10 * n).max(3000));
    if m < opts.min_sample_ratio * n {
        return Err(Error::invalid(format!(
            "{m} samples for {n} anchors violates the minimum ratio {}",
            opts.min_sample_ratio
        )));
    }
    let a = ds.alphabet.len();
    let pairs = sample_pairs(ds, m, params.k, rng)?;
    let points: Vec<Vec<f64>> = pairs
        .iter()
        .map(|p| {
            let mut v = p.motif.clone();
            v.extend_from_slice(&p.position.as_array());
            v
        })
        .collect();
    let km = kmeans_pp(&points, n, rng, opts.max_iter, opts.tol)?;
    let anchors: Vec<MotifPositionPair> = km
        .centers
        .iter()
        .map(|c| project_to_anchor(c, a))
        .collect();
    let mut set = AnchorSet::from_pairs(&anchors, a, params.k, opts.eps_rel)?;
    set.refresh(params)?;
    Ok(set)
}
