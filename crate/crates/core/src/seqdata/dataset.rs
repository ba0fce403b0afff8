use super::{encoding::encode_with_id, Alphabet, EncodedSequence};
use crate::error::{Error, Result};

/// Encoded sequences sharing one alphabet, with optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub alphabet: Alphabet,
    pub sequences: Vec<EncodedSequence>,
    pub class_names: Vec<String>,
}

impl LabeledDataset {
    /// Validates that labels lie in `[0, class_names.len())` and that all
    /// sequences were encoded over `alphabet`.
    pub fn new(
        alphabet: Alphabet,
        sequences: Vec<EncodedSequence>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        for s in &sequences {
            if s.alphabet_size() != alphabet.len() {
                return Err(Error::invalid(format!(
                    "sequence '{}' encoded over {} symbols, alphabet has {}",
                    s.id,
                    s.alphabet_size(),
                    alphabet.len()
                )));
            }
            if let Some(l) = s.label {
                if l >= class_names.len() {
                    return Err(Error::invalid(format!(
                        "sequence '{}' has label {l} but only {} classes",
                        s.id,
                        class_names.len()
                    )));
                }
            }
        }
        Ok(LabeledDataset {
            alphabet,
            sequences,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Per-class sample counts (unlabeled sequences are not counted).
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for l in self.sequences.iter().filter_map(|s| s.label) {
            counts[l] += 1;
        }
        counts
    }

    /// Labels of every sequence; errors if any is missing.
    pub fn labels(&self) -> Result<Vec<usize>> {
        self.sequences
            .iter()
            .map(|s| {
                s.label
                    .ok_or_else(|| Error::invalid(format!("sequence '{}' has no label", s.id)))
            })
            .collect()
    }

    /// Sub-dataset with the sequences at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        LabeledDataset {
            alphabet: self.alphabet.clone(),
            sequences: indices.iter().map(|&i| self.sequences[i].clone()).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Common sequence length, if all sequences have the same length.
    pub fn uniform_length(&self) -> Option<usize> {
        let first = self.sequences.first()?.len();
        self.sequences
            .iter()
            .all(|s| s.len() == first)
            .then_some(first)
    }
}

/// Whether FASTA headers must carry `label=<int>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelPolicy {
    Required,
    Optional,
}

/// Parses FASTA records with headers of the form `>id label=<int>`.
pub fn parse_fasta(text: &str, alphabet: &Alphabet, policy: LabelPolicy) -> Result<LabeledDataset> {
    struct Record {
        id: String,
        label: Option<usize>,
        body: String,
        line: usize,
    }

    let mut records: Vec<Record> = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            let mut tokens = header.split_whitespace();
            let id = tokens.next().ok_or(Error::Parse {
                line: line_no,
                message: "header without identifier".into(),
            })?;
            let mut label = None;
            for tok in tokens {
                if let Some(v) = tok.strip_prefix("label=") {
                    let l = v.parse::<usize>().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("label '{v}' is not a nonnegative integer"),
                    })?;
                    label = Some(l);
                }
            }
            if label.is_none() && policy == LabelPolicy::Required {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("record '{id}' has no label= field"),
                });
            }
            records.push(Record {
                id: id.to_string(),
                label,
                body: String::new(),
                line: line_no,
            });
        } else {
            let rec = records.last_mut().ok_or(Error::Parse {
                line: line_no,
                message: "sequence data before first header".into(),
            })?;
            rec.body.extend(line.chars().filter(|c| !c.is_whitespace()));
        }
    }

    let num_classes = records
        .iter()
        .filter_map(|r| r.label)
        .max()
        .map_or(0, |m| m + 1);
    let mut sequences = Vec::with_capacity(records.len());
    for r in records {
        let seq = encode_with_id(&r.body, alphabet, r.id, r.label).map_err(|e| match e {
            Error::UnknownSymbol { position, symbol } => Error::Parse {
                line: r.line,
                message: format!("unknown symbol '{symbol}' at sequence position {position}"),
            },
            other => other,
        })?;
        sequences.push(seq);
    }
    let class_names = (0..num_classes.max(if policy == LabelPolicy::Required { 2 } else { 0 }))
        .map(|c| c.to_string())
        .collect();
    LabeledDataset::new(alphabet.clone(), sequences, class_names)
}

const FASTA_WIDTH: usize = 80;

/// Serializes a dataset as FASTA with 80-column sequence lines.
pub fn write_fasta(ds: &LabeledDataset) -> String {
    let mut out = String::new();
    for s in &ds.sequences {
        write_record(&mut out, &s.id, s.label, s.text());
    }
    out
}

pub(crate) fn write_record(out: &mut String, id: &str, label: Option<usize>, text: &str) {
    out.push('>');
    out.push_str(id);
    if let Some(l) = label {
        out.push_str(&format!(" label={l}"));
    }
    out.push('\n');
    let chars: Vec<char> = text.chars().collect();
    for chunk in chars.chunks(FASTA_WIDTH) {
        out.extend(chunk.iter());
        out.push('\n');
    }
}
