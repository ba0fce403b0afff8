use serde::{Deserialize, Serialize};

use super::Alphabet;
use crate::error::{Error, Result};

/// Normalized position frequency matrix: nonnegative `|A| × k`, unit-ℓ2 columns.
///
/// Stored column-major, which is also the flattened motif vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifNpfm {
    alphabet_size: usize,
    k: usize,
    data: Vec<f64>,
}

impl MotifNpfm {
    /// Normalizes a matrix of (possibly fractional) counts column by column.
    /// Negative entries are clamped to zero; an all-zero column becomes uniform.
    pub fn from_counts(alphabet_size: usize, counts: Vec<f64>) -> Result<Self> {
        if alphabet_size == 0 || counts.is_empty() || counts.len() % alphabet_size != 0 {
            return Err(Error::invalid(format!(
                "count matrix of {} entries is not a multiple of |A|={alphabet_size}",
                counts.len()
            )));
        }
        let k = counts.len() / alphabet_size;
        let mut data = counts;
        normalize_columns(&mut data, alphabet_size);
        Ok(MotifNpfm {
            alphabet_size,
            k,
            data,
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn flattened(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.alphabet_size..(j + 1) * self.alphabet_size]
    }

    pub fn get(&self, symbol: usize, j: usize) -> f64 {
        self.data[j * self.alphabet_size + symbol]
    }

    /// Symbols of column `j` sorted by decreasing weight (ties by alphabet order).
    pub fn ranked_letters(&self, j: usize, alphabet: &Alphabet) -> Vec<(char, f64)> {
        let mut v: Vec<(usize, f64)> = self.column(j).iter().copied().enumerate().collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter().map(|(i, w)| (alphabet.symbol(i), w)).collect()
    }

    /// Column-wise argmax letters.
    pub fn consensus(&self, alphabet: &Alphabet) -> String {
        (0..self.k)
            .map(|j| self.ranked_letters(j, alphabet)[0].0)
            .collect()
    }
}

/// Clamps negatives and rescales each length-`alphabet_size` column to unit ℓ2;
/// zero columns become `1/√|A|`.
pub fn normalize_columns(data: &mut [f64], alphabet_size: usize) {
    let uniform = 1.0 / (alphabet_size as f64).sqrt();
    for col in data.chunks_mut(alphabet_size) {
        for v in col.iter_mut() {
            if *v < 0.0 || !v.is_finite() {
                *v = 0.0;
            }
        }
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            col.iter_mut().for_each(|v| *v /= norm);
        } else {
            col.iter_mut().for_each(|v| *v = uniform);
        }
    }
}

/// Builds the nPFM of a set of encoded windows of equal length.
///
/// Each window column contributes its squared entries as counts, which is
/// exactly one count for a one-hot column and `1/s` per member for an
/// ambiguity code over `s` symbols.
pub fn build_npfm(windows: &[&[f64]], alphabet_size: usize) -> Result<MotifNpfm> {
    let first = windows
        .first()
        .ok_or_else(|| Error::invalid("cannot build an nPFM from zero windows"))?;
    if alphabet_size == 0 || first.is_empty() || first.len() % alphabet_size != 0 {
        return Err(Error::invalid("window length is not a multiple of |A|"));
    }
    let mut counts = vec![0.0; first.len()];
    for w in windows {
        if w.len() != first.len() {
            return Err(Error::invalid(format!(
                "window lengths differ: {} vs {}",
                w.len(),
                first.len()
            )));
        }
        for (c, v) in counts.iter_mut().zip(w.iter()) {
            *c += v * v;
        }
    }
    MotifNpfm::from_counts(alphabet_size, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqdata::encode_sequence;

    fn win(s: &str) -> Vec<f64> {
        encode_sequence(s, &Alphabet::dna()).unwrap().matrix().to_vec()
    }

    #[test]
    fn unanimous_counts_give_one_hot() {
        let (a, b) = (win("AC"), win("AC"));
        let m = build_npfm(&[&a, &b], 4).unwrap();
        assert_eq!(m.flattened(), &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(m.consensus(&Alphabet::dna()), "AC");
    }

    #[test]
    fn equal_counts_normalize_by_l2() {
        let (a, c) = (win("A"), win("C"));
        let m = build_npfm(&[&a, &c], 4).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((m.get(0, 0) - h).abs() < 1e-15 && (m.get(1, 0) - h).abs() < 1e-15);
        assert_eq!(m.get(2, 0), 0.0);
    }

    #[test]
    fn three_four_five() {
        let m = MotifNpfm::from_counts(4, vec![3.0, 4.0, 0.0, 0.0]).unwrap();
        assert!((m.get(0, 0) - 0.6).abs() < 1e-15);
        assert!((m.get(1, 0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn errors_and_zero_columns() {
        assert!(build_npfm(&[], 4).is_err());
        let (a, b) = (win("A"), win("AC"));
        assert!(build_npfm(&[&a, &b], 4).is_err());
        let m = MotifNpfm::from_counts(4, vec![0.0; 4]).unwrap();
        assert!(m.flattened().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn ranked_letters_sorted() {
        let m = MotifNpfm::from_counts(4, vec![1.0, 3.0, 2.0, 0.0]).unwrap();
        let r = m.ranked_letters(0, &Alphabet::dna());
        let letters: String = r.iter().map(|x| x.0).collect();
        assert_eq!(letters, "CGAT");
    }
}
