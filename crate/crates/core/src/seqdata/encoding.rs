use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Alphabet;
use crate::error::{Error, Result};

/// A sequence position mapped onto the upper half of the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirclePoint {
    pub x: f64,
    pub y: f64,
}

impl CirclePoint {
    pub fn new(x: f64, y: f64) -> Self {
        CirclePoint { x, y }
    }

    pub fn dot(&self, other: &CirclePoint) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// Maps 1-based position `p` of a length-`len` sequence to `(cos(pπ/L), sin(pπ/L))`.
pub fn map_position(p: usize, len: usize) -> Result<CirclePoint> {
    if len == 0 || p == 0 || p > len {
        return Err(Error::invalid(format!(
            "position {p} outside 1..={len}"
        )));
    }
    let angle = p as f64 / len as f64 * PI;
    Ok(CirclePoint::new(angle.cos(), angle.sin()))
}

/// One-hot (or uniform-over-candidates) encoding of a sequence.
///
/// `data` is the column-major `|A| × L` matrix, so the window starting at
/// position `p` is the contiguous slice of columns `p..p+k-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSequence {
    pub id: String,
    pub label: Option<usize>,
    text: String,
    alphabet_size: usize,
    data: Vec<f64>,
}

impl EncodedSequence {
    pub fn len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Upper-cased source text.
    pub fn text(&self) -> &str {
        &self.text
    }

    /// Column-major `|A| × L` matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, p: usize) -> &[f64] {
        let a = self.alphabet_size;
        &self.data[(p - 1) * a..p * a]
    }

    /// Number of valid motif windows of length `k`.
    pub fn num_windows(&self, k: usize) -> usize {
        (self.len() + 1).saturating_sub(k)
    }

    /// Flattened window of length `k` starting at 1-based position `p`.
    pub fn window(&self, p: usize, k: usize) -> Result<&[f64]> {
        extract_window(self, p, k)
    }
}

/// Encodes `raw` over `alphabet`; ambiguity codes spread `1/√s` over their `s` members.
pub fn encode_sequence(raw: &str, alphabet: &Alphabet) -> Result<EncodedSequence> {
    encode_with_id(raw, alphabet, String::new(), None)
}

pub(crate) fn encode_with_id(
    raw: &str,
    alphabet: &Alphabet,
    id: String,
    label: Option<usize>,
) -> Result<EncodedSequence> {
    if raw.is_empty() {
        return Err(Error::EmptySequence {
            id: (!id.is_empty()).then_some(id),
        });
    }
    let a = alphabet.len();
    let n = raw.chars().count();
    let mut data = vec![0.0; a * n];
    let mut text = String::with_capacity(n);
    for (i, c) in raw.chars().enumerate() {
        let members = alphabet.members(c).ok_or(Error::UnknownSymbol {
            position: i + 1,
            symbol: c,
        })?;
        let v = 1.0 / (members.len() as f64).sqrt();
        for m in members {
            data[i * a + m] = v;
        }
        text.push(c.to_ascii_uppercase());
    }
    Ok(EncodedSequence {
        id,
        label,
        text,
        alphabet_size: a,
        data,
    })
}

/// Flattened motif of length `k` starting at 1-based `p` (columns concatenated).
pub fn extract_window(seq: &EncodedSequence, p: usize, k: usize) -> Result<&[f64]> {
    let len = seq.len();
    if k == 0 || p == 0 || p + k > len + 1 {
        return Err(Error::invalid(format!(
            "window start {p} with k={k} does not fit a sequence of length {len}"
        )));
    }
    let a = seq.alphabet_size;
    Ok(&seq.data[(p - 1) * a..(p - 1 + k) * a])
}
