//! Sequence data: alphabets, encodings, motif matrices, file formats,
//! synthetic data, resampling and fold splits.

mod alphabet;
mod dataset;
mod encoding;
mod hivdb;
mod npfm;
mod resample;
mod synthetic;

pub use alphabet::Alphabet;
pub use dataset::{parse_fasta, write_fasta, LabelPolicy, LabeledDataset};
pub use encoding::{encode_sequence, extract_window, map_position, CirclePoint, EncodedSequence};
pub use hivdb::{convert_hivdb, ResistanceThresholds};
pub use npfm::{build_npfm, normalize_columns, MotifNpfm};
pub use resample::{stratified_holdout, stratified_kfold, undersample_negatives, Fold};
pub use synthetic::{generate_synthetic, ClassMotif, SyntheticConfig, SyntheticData};
