//! Synthetic DNA data with one positionally jittered motif per class.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{dataset::LabeledDataset, encoding::encode_with_id, Alphabet};
use crate::error::{Error, Result};

/// Motif embedded into every sequence of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMotif {
    pub name: String,
    /// One letter distribution per motif column.
    pub consensus: Vec<BTreeMap<char, f64>>,
    /// 1-based start position of the motif before jitter.
    pub center: usize,
    pub jitter: usize,
}

impl ClassMotif {
    /// Column-wise most probable letters (ties by letter order).
    pub fn argmax_consensus(&self) -> String {
        self.consensus
            .iter()
            .map(|d| {
                d.iter()
                    .fold(None, |best: Option<(char, f64)>, (&c, &p)| match best {
                        Some((_, bp)) if bp >= p => best,
                        _ => Some((c, p)),
                    })
                    .map_or('N', |(c, _)| c)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub num_sequences: usize,
    pub sequence_length: usize,
    pub motif_length: usize,
    pub classes: Vec<ClassMotif>,
    pub seed: u64,
}

fn dist(entries: &[(char, f64)]) -> BTreeMap<char, f64> {
    entries.iter().copied().collect()
}

impl Default for SyntheticConfig {
    /// 1000 DNA sequences of length 100; a 5-mer motif at position 20 (±5)
    /// in negatives and at 80 (±5) in positives, with two-thirds/one-third
    /// compositional variability in some columns.
    fn default() -> Self {
        let two = 2.0 / 3.0;
        let one = 1.0 / 3.0;
        SyntheticConfig {
            num_sequences: 1000,
            sequence_length: 100,
            motif_length: 5,
            seed: 1,
            classes: vec![
                ClassMotif {
                    name: "negative".into(),
                    consensus: vec![
                        dist(&[('G', 1.0)]),
                        dist(&[('C', two), ('T', one)]),
                        dist(&[('A', 1.0)]),
                        dist(&[('T', 1.0)]),
                        dist(&[('G', two), ('C', one)]),
                    ],
                    center: 20,
                    jitter: 5,
                },
                ClassMotif {
                    name: "positive".into(),
                    consensus: vec![
                        dist(&[('T', 1.0)]),
                        dist(&[('A', 1.0)]),
                        dist(&[('C', two), ('G', one)]),
                        dist(&[('G', 1.0)]),
                        dist(&[('A', two), ('T', one)]),
                    ],
                    center: 80,
                    jitter: 5,
                },
            ],
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self, alphabet: &Alphabet) -> Result<()> {
        let k = self.motif_length;
        let len = self.sequence_length;
        if self.classes.len() < 2 {
            return Err(Error::invalid("synthetic data needs at least two classes"));
        }
        if self.num_sequences < self.classes.len() {
            return Err(Error::invalid("fewer sequences than classes"));
        }
        if k == 0 || k > len {
            return Err(Error::invalid(format!("motif length {k} does not fit length {len}")));
        }
        for c in &self.classes {
            if c.consensus.len() != k {
                return Err(Error::invalid(format!(
                    "class '{}' has {} motif columns, expected {k}",
                    c.name,
                    c.consensus.len()
                )));
            }
            if c.center <= c.jitter || c.center + c.jitter > len - k + 1 {
                return Err(Error::invalid(format!(
                    "class '{}': start {} ± {} leaves the window range 1..={}",
                    c.name,
                    c.center,
                    c.jitter,
                    len - k + 1
                )));
            }
            for (j, d) in c.consensus.iter().enumerate() {
                let total: f64 = d.values().sum();
                if (total - 1.0).abs() > 1e-6 || d.values().any(|&p| p < 0.0) {
                    return Err(Error::invalid(format!(
                        "class '{}' column {} is not a distribution (sum {total})",
                        c.name,
                        j + 1
                    )));
                }
                if let Some(c) = d.keys().find(|&&c| alphabet.index_of(c).is_none()) {
                    return Err(Error::invalid(format!("motif letter '{c}' not in alphabet")));
                }
            }
        }
        Ok(())
    }
}

/// Generated data plus the 1-based motif start used in each sequence.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: LabeledDataset,
    pub motif_starts: Vec<usize>,
}

fn sample_letter<R: Rng + ?Sized>(d: &BTreeMap<char, f64>, rng: &mut R) -> char {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 'A';
    for (&c, &p) in d {
        acc += p;
        last = c;
        if u < acc {
            return c;
        }
    }
    last
}

/// Uniform i.i.d. DNA background with the class motif written at
/// `center + U{-jitter..=jitter}`; labels cycle through the classes.
pub fn generate_synthetic<R: Rng + ?Sized>(config: &SyntheticConfig, rng: &mut R) -> Result<SyntheticData> {
    let alphabet = Alphabet::dna();
    config.validate(&alphabet)?;
    let n_classes = config.classes.len();
    let mut sequences = Vec::with_capacity(config.num_sequences);
    let mut starts = Vec::with_capacity(config.num_sequences);
    for i in 0..config.num_sequences {
        let label = i % n_classes;
        let mut letters: Vec<char> = (0..config.sequence_length)
            .map(|_| alphabet.symbol(rng.random_range(0..alphabet.len())))
            .collect();
        let motif = &config.classes[label];
        let j = motif.jitter as i64;
        let start = (motif.center as i64 + rng.random_range(-j..=j)) as usize;
        for (col, d) in motif.consensus.iter().enumerate() {
            letters[start - 1 + col] = sample_letter(d, rng);
        }
        let text: String = letters.into_iter().collect();
        sequences.push(encode_with_id(&text, &alphabet, format!("seq{}", i + 1), Some(label))?);
        starts.push(start);
    }
    let class_names = config.classes.iter().map(|c| c.name.clone()).collect();
    Ok(SyntheticData {
        dataset: LabeledDataset::new(alphabet, sequences, class_names)?,
        motif_starts: starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn default_config_matches_experiment() {
        let c = SyntheticConfig::default();
        assert_eq!((c.num_sequences, c.sequence_length, c.motif_length), (1000, 100, 5));
        assert_eq!((c.classes[0].center, c.classes[1].center), (20, 80));
        assert!(c.classes.iter().all(|m| m.jitter == 5));
        c.validate(&Alphabet::dna()).unwrap();
        let data = generate_synthetic(&c, &mut seeded(3, 1)).unwrap();
        assert_eq!(data.dataset.class_counts(), vec![500, 500]);
        for (s, &st) in data.dataset.sequences.iter().zip(&data.motif_starts) {
            let m = &c.classes[s.label.unwrap()];
            assert!(st + 5 >= m.center && st <= m.center + 5);
        }
    }

    #[test]
    fn column_two_frequency() {
        let mut c = SyntheticConfig::default();
        c.num_sequences = 20_000;
        let data = generate_synthetic(&c, &mut seeded(11, 1)).unwrap();
        let mut n = 0;
        let mut cyt = 0;
        for (s, &st) in data.dataset.sequences.iter().zip(&data.motif_starts) {
            if s.label == Some(0) {
                n += 1;
                if s.text().as_bytes()[st] == b'C' {
                    cyt += 1;
                }
            }
        }
        assert_eq!(n, 10_000);
        let f = cyt as f64 / n as f64;
        assert!((f - 2.0 / 3.0).abs() < 0.05, "{f}");
    }

    #[test]
    fn zero_jitter_degenerate_motif_is_exact() {
        let mut c = SyntheticConfig::default();
        c.num_sequences = 50;
        for m in &mut c.classes {
            m.jitter = 0;
            for d in &mut m.consensus {
                let best = *d.iter().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
                *d = dist(&[(best, 1.0)]);
            }
        }
        let data = generate_synthetic(&c, &mut seeded(5, 1)).unwrap();
        for s in &data.dataset.sequences {
            let m = &c.classes[s.label.unwrap()];
            assert_eq!(&s.text()[m.center - 1..m.center + 4], m.argmax_consensus());
        }
    }

    #[test]
    fn reproducible() {
        let c = SyntheticConfig::default();
        let a = generate_synthetic(&c, &mut seeded(9, 1)).unwrap();
        let b = generate_synthetic(&c, &mut seeded(9, 1)).unwrap();
        assert_eq!(a.dataset, b.dataset);
        let d = generate_synthetic(&c, &mut seeded(10, 1)).unwrap();
        assert_ne!(a.dataset, d.dataset);
    }

    #[test]
    fn invalid_configs() {
        let dna = Alphabet::dna();
        let mut c = SyntheticConfig::default();
        c.classes[1].center = 95;
        assert!(c.validate(&dna).is_err());
        let mut c = SyntheticConfig::default();
        c.classes[0].consensus[1] = dist(&[('C', 0.5)]);
        assert!(c.validate(&dna).is_err());
        let mut c = SyntheticConfig::default();
        c.classes[0].consensus[0] = dist(&[('Q', 1.0)]);
        assert!(c.validate(&dna).is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let c = SyntheticConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<SyntheticConfig>(&s).unwrap(), c);
    }
}
