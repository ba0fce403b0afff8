use rand::seq::SliceRandom;
use rand::Rng;

use super::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{seeded, stream};

/// Randomly drops negatives (label 0) until `N_pos / N_neg >= ratio`,
/// keeping as many negatives as that allows. Positives are untouched and the
/// original order is preserved. Returns the input unchanged when the ratio
/// is already met or `ratio <= 0`.
pub fn undersample_negatives<R: Rng + ?Sized>(
    ds: &LabeledDataset,
    ratio: f64,
    rng: &mut R,
) -> Result<LabeledDataset> {
    if ds.num_classes() != 2 {
        return Err(Error::invalid("undersampling needs exactly two classes"));
    }
    let labels = ds.labels()?;
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    let n_pos = labels.len() - neg.len();
    if ratio <= 0.0 || neg.is_empty() || n_pos as f64 / neg.len() as f64 >= ratio {
        return Ok(ds.clone());
    }
    let keep_neg = ((n_pos as f64 / ratio) + 1e-9).floor() as usize;
    let mut order = neg.clone();
    order.shuffle(rng);
    let mut keep = vec![true; labels.len()];
    for &i in &order[keep_neg..] {
        keep[i] = false;
    }
    let idx: Vec<usize> = (0..labels.len()).filter(|&i| keep[i]).collect();
    Ok(ds.subset(&idx))
}

/// A train/validation index split.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified k-fold split of `labels`.
///
/// Each class is shuffled and dealt round-robin into the folds, continuing
/// the deal across classes so fold sizes differ by at most one.
pub fn stratified_kfold(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<Fold>> {
    if folds < 2 {
        return Err(Error::invalid("need at least two folds"));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = seeded(seed, stream::FOLDS);
    let mut assignment = vec![0usize; labels.len()];
    let mut slot = 0usize;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < folds {
            return Err(Error::invalid(format!(
                "class {c} has {} samples, fewer than {folds} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = slot % folds;
            slot += 1;
        }
    }
    Ok((0..folds)
        .map(|f| {
            let (validation, train): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| assignment[i] == f);
            Fold { train, validation }
        })
        .collect())
}

/// Deterministic holdout split stratified by class: `fraction` of each
/// class goes to the held-out part.
pub fn stratified_holdout(labels: &[usize], fraction: f64, seed: u64) -> Result<Fold> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid("holdout fraction must be in [0, 1)"));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = seeded(seed, stream::SPLIT);
    let mut held = vec![false; labels.len()];
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        let take = (members.len() as f64 * fraction).round() as usize;
        for &i in &members[..take] {
            held[i] = true;
        }
    }
    let (validation, train) = (0..labels.len()).partition(|&i| held[i]);
    Ok(Fold { train, validation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqdata::{encode_sequence, Alphabet, EncodedSequence};

    fn dataset(pos: usize, neg: usize) -> LabeledDataset {
        let dna = Alphabet::dna();
        let seqs: Vec<EncodedSequence> = (0..pos + neg)
            .map(|i| {
                let mut s = encode_sequence("ACGT", &dna).unwrap();
                s.id = format!("s{i}");
                s.label = Some(usize::from(i < pos));
                s
            })
            .collect();
        LabeledDataset::new(dna, seqs, vec!["0".into(), "1".into()]).unwrap()
    }

    #[test]
    fn undersample_to_quarter_ratio() {
        let ds = dataset(10, 990);
        let out = undersample_negatives(&ds, 0.25, &mut seeded(1, 7)).unwrap();
        assert_eq!(out.class_counts(), vec![40, 10]);
        let again = undersample_negatives(&ds, 0.25, &mut seeded(1, 7)).unwrap();
        assert_eq!(out, again);
        let unchanged = undersample_negatives(&ds, 0.0, &mut seeded(1, 7)).unwrap();
        assert_eq!(unchanged, ds);
        let already = undersample_negatives(&dataset(50, 100), 0.25, &mut seeded(1, 7)).unwrap();
        assert_eq!(already.len(), 150);
    }

    #[test]
    fn kfold_exact_divisibility() {
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i >= 60)).collect();
        let folds = stratified_kfold(&labels, 5, 3).unwrap();
        let mut seen = vec![0; 100];
        for f in &folds {
            let pos = f.validation.iter().filter(|&&i| labels[i] == 1).count();
            assert_eq!((f.validation.len() - pos, pos), (12, 8));
            assert_eq!(f.train.len() + f.validation.len(), 100);
            for &i in &f.validation {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn kfold_seed_behaviour() {
        let labels: Vec<usize> = (0..1000).map(|i| i % 2).collect();
        let a = stratified_kfold(&labels, 5, 1).unwrap();
        let b = stratified_kfold(&labels, 5, 1).unwrap();
        let c = stratified_kfold(&labels, 5, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn kfold_errors() {
        assert!(stratified_kfold(&[0, 0, 1], 2, 0).is_err());
        assert!(stratified_kfold(&[0, 1, 0, 1], 1, 0).is_err());
    }

    #[test]
    fn kfold_uneven_proportions_within_one() {
        let labels: Vec<usize> = (0..103).map(|i| usize::from(i % 7 == 0)).collect();
        let n1 = labels.iter().filter(|&&l| l == 1).count() as f64;
        let folds = stratified_kfold(&labels, 5, 9).unwrap();
        for f in &folds {
            let pos = f.validation.iter().filter(|&&i| labels[i] == 1).count() as f64;
            assert!((pos - n1 / 5.0).abs() <= 1.0);
            let neg = f.validation.len() as f64 - pos;
            assert!((neg - (103.0 - n1) / 5.0).abs() <= 1.0);
        }
    }

    #[test]
    fn holdout_split() {
        let labels: Vec<usize> = (0..1000).map(|i| i % 2).collect();
        let f = stratified_holdout(&labels, 0.2, 4).unwrap();
        assert_eq!(f.validation.len(), 200);
        assert_eq!(f.validation.iter().filter(|&&i| labels[i] == 1).count(), 100);
    }
}
