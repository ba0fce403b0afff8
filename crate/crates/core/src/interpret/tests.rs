use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::*;
use crate::kernel::MotifPositionPair;
use crate::network::DenseLayer;
use crate::nystroem::{project_to_anchor, AnchorSet, DEFAULT_EPS_REL};
use crate::rng::seeded;
use crate::seqdata::{encode_sequence, Alphabet};

fn one_hot(i: usize) -> Vec<f64> {
    let mut v = vec![0.0; 4];
    v[i] = 1.0;
    v
}

/// k = 1 model over DNA with the given anchors and head weights.
fn model_with(anchors: Vec<MotifPositionPair>, len: usize, weights: Vec<DMatrix<f64>>, head: Head) -> CmknModel {
    let p = KernelParams::new(1, 1.0, 10.0, 1.0).unwrap();
    let set = AnchorSet::from_pairs(&anchors, 4, 1, DEFAULT_EPS_REL).unwrap();
    let layers = weights
        .into_iter()
        .map(|w| {
            let rows = w.nrows();
            DenseLayer::new(w, DVector::zeros(rows)).unwrap()
        })
        .collect();
    CmknModel::new(Alphabet::dna(), p, len, set, layers, head, vec!["neg".into(), "pos".into()]).unwrap()
}

fn random_anchors(n: usize, rng: &mut impl Rng) -> Vec<MotifPositionPair> {
    (0..n)
        .map(|_| project_to_anchor(&(0..6).map(|_| rng.random::<f64>()).collect::<Vec<_>>(), 4))
        .collect()
}

/// Sum over all paths from kernel neuron `start` to output `class` whose
/// edges are all positive, of the product of the weights before the last edge.
fn enumerate_paths(ws: &[DMatrix<f64>], start: usize, class: usize) -> f64 {
    fn walk(ws: &[DMatrix<f64>], layer: usize, node: usize, class: usize, prod: f64) -> f64 {
        let w = &ws[layer];
        if layer == ws.len() - 1 {
            return if w[(class, node)] > 0.0 { prod } else { 0.0 };
        }
        (0..w.nrows())
            .filter(|&m| w[(m, node)] > 0.0)
            .map(|m| walk(ws, layer + 1, m, class, prod * w[(m, node)]))
            .sum()
    }
    walk(ws, 0, start, class, 1.0)
}

#[test]
fn uniform_single_layer() {
    let mut rng = seeded(1, 0);
    let m = model_with(random_anchors(2, &mut rng), 3, vec![DMatrix::from_element(2, 6, 0.3)], Head::Softmax);
    for c in 0..2 {
        let imp = position_importance(&m, c).unwrap();
        assert_eq!(imp.importance, vec![1.0; 3]);
        assert!(imp.normalized.iter().all(|v| v.abs() < 1e-15));
    }
    let neg = model_with(
        random_anchors(2, &mut rng),
        3,
        vec![DMatrix::from_element(4, 6, -0.3), DMatrix::from_element(2, 4, 0.5)],
        Head::Softmax,
    );
    assert_eq!(position_importance(&neg, 0).unwrap().importance, vec![0.0; 3]);
}

#[test]
fn hand_built_two_layer_network() {
    // 2 anchors, 2 positions, hidden 3, 2 classes
    let w1 = DMatrix::from_row_slice(3, 4, &[
        0.5, -1.0, 2.0, 0.0, //
        1.0, 1.0, -0.5, 0.25, //
        -2.0, 0.5, 1.5, 1.0,
    ]);
    let w2 = DMatrix::from_row_slice(2, 3, &[
        1.0, -1.0, 0.2, //
        -0.3, 0.7, 0.9,
    ]);
    let mut rng = seeded(2, 0);
    let m = model_with(random_anchors(2, &mut rng), 2, vec![w1, w2], Head::Softmax);
    // class 0 reaches hidden 0 and 2; class 1 reaches hidden 1 and 2
    assert_eq!(neuron_scores(&m, 0).unwrap(), vec![0.5, 0.5, 3.5, 1.0]);
    assert_eq!(neuron_scores(&m, 1).unwrap(), vec![1.0, 1.5, 1.5, 1.25]);
    let imp = position_importance(&m, 1).unwrap();
    assert_eq!(imp.importance, vec![1.25, 1.375]);
}

#[test]
fn matches_path_enumeration_on_random_networks() {
    let mut rng = seeded(3, 0);
    for trial in 0..50 {
        let n = rng.random_range(1..4);
        let len = rng.random_range(1..5);
        let depth = 1 + trial % 3;
        let mut dims = vec![n * len];
        for _ in 1..depth {
            dims.push(rng.random_range(1..6));
        }
        dims.push(2);
        let ws: Vec<DMatrix<f64>> = dims
            .windows(2)
            .map(|d| DMatrix::from_fn(d[1], d[0], |_, _| rng.random::<f64>() * 2.0 - 1.0))
            .collect();
        let m = model_with(random_anchors(n, &mut rng), len, ws.clone(), Head::Softmax);
        for c in 0..2 {
            let s = neuron_scores(&m, c).unwrap();
            for (i, v) in s.iter().enumerate() {
                assert!((v - enumerate_paths(&ws, i, c)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn single_logit_reads_sign_per_class() {
    let w = DMatrix::from_row_slice(1, 4, &[0.5, -0.2, 0.0, 1.0]);
    let mut rng = seeded(4, 0);
    let m = model_with(random_anchors(2, &mut rng), 2, vec![w], Head::SingleLogit);
    assert_eq!(neuron_scores(&m, 1).unwrap(), vec![1.0, 0.0, 0.0, 1.0]);
    assert_eq!(neuron_scores(&m, 0).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
}

#[test]
fn invariant_under_anchor_permutation() {
    let mut rng = seeded(5, 0);
    let anchors = random_anchors(3, &mut rng);
    let len = 4;
    let w1 = DMatrix::from_fn(5, 12, |_, _| rng.random::<f64>() - 0.4);
    let w2 = DMatrix::from_fn(2, 5, |_, _| rng.random::<f64>() - 0.4);
    let m = model_with(anchors.clone(), len, vec![w1.clone(), w2.clone()], Head::Softmax);
    let perm = [2usize, 0, 1];
    let pa: Vec<MotifPositionPair> = perm.iter().map(|&i| anchors[i].clone()).collect();
    let pw1 = DMatrix::from_fn(5, 12, |r, c| w1[(r, perm[c / len] * len + c % len)]);
    let pm = model_with(pa, len, vec![pw1, w2], Head::Softmax);
    for c in 0..2 {
        let a = position_importance(&m, c).unwrap().importance;
        let b = position_importance(&pm, c).unwrap().importance;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn peaks() {
    let flat = vec![0.7; 30];
    assert!(detect_peaks(&flat, 11, 30).unwrap().iter().all(|p| p.score.abs() < 1e-15));
    let mut spike = vec![0.0; 30];
    spike[16] = 1.0;
    assert_eq!(detect_peaks(&spike, 11, 1).unwrap()[0].position, 17);
    assert!(detect_peaks(&spike, 10, 1).is_err());
    assert!(detect_peaks(&spike, 31, 1).is_err());

    let mut rng = seeded(6, 0);
    let base: Vec<f64> = (0..60).map(|_| rng.random::<f64>()).collect();
    let score_at = |v: &[f64], pos: usize| {
        detect_peaks(v, 11, 60).unwrap().into_iter().find(|p| p.position == pos).unwrap().score
    };
    let shifted: Vec<f64> = (0..60).map(|i| base[(i + 60 - 3) % 60]).collect();
    for pos in 10..45 {
        assert!((score_at(&base, pos) - score_at(&shifted, pos + 3)).abs() < 1e-12);
    }
}

#[test]
fn mean_motifs() {
    let z_a = MotifPositionPair::new(one_hot(0), map_position(1, 2).unwrap());
    let z_c = MotifPositionPair::new(one_hot(1), map_position(2, 2).unwrap());
    let w = DMatrix::from_row_slice(2, 4, &[
        0.0, 0.0, 0.0, 0.0, //
        1.0, 1.0, 1.0, -1.0,
    ]);
    let m = model_with(vec![z_a.clone(), z_c], 2, vec![w], Head::Softmax);
    let both = mean_motif_at(&m, 1, 1).unwrap();
    let h = 1.0 / 2f64.sqrt();
    let got = both.npfm.unwrap();
    for (x, y) in got.flattened().iter().zip([h, h, 0.0, 0.0]) {
        assert!((x - y).abs() < 1e-15);
    }
    let single = mean_motif_at(&m, 2, 1).unwrap();
    assert_eq!(single.npfm.unwrap().flattened(), z_a.motif.as_slice());
    assert!(mean_motif_at(&m, 1, 0).unwrap().is_empty());
    assert!(mean_motif_at(&m, 3, 0).is_err());
}

fn random_model(seed: u64) -> CmknModel {
    let mut rng = seeded(seed, 0);
    let len = 8;
    let w1 = DMatrix::from_fn(6, 3 * len, |_, _| rng.random::<f64>() - 0.3);
    let w2 = DMatrix::from_fn(2, 6, |_, _| rng.random::<f64>() - 0.5);
    model_with(random_anchors(3, &mut rng), len, vec![w1, w2], Head::Softmax)
}

#[test]
fn local_report_is_scaled_and_deterministic() {
    let m = random_model(7);
    let dna = Alphabet::dna();
    let x = encode_sequence("ACGTTGCA", &dna).unwrap();
    let r = local_report(&m, &x, &[1, 4, 8]).unwrap();
    for e in &r.entries {
        let max = e.scaled.iter().flatten().copied().fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-15);
        assert_eq!(e.scaled[e.assigned_class], Some(1.0));
        assert_eq!(e.letters.len(), 1);
    }
    assert_eq!(r, local_report(&m, &x, &[1, 4, 8]).unwrap());
    assert!(local_report(&m, &x, &[9]).is_err());
}

#[test]
fn head_scaling_keeps_rankings() {
    let dna = Alphabet::dna();
    let x = encode_sequence("GGATCCTA", &dna).unwrap();
    for seed in 0..10 {
        let m = random_model(20 + seed);
        let mut scaled = m.clone();
        for l in &mut scaled.layers {
            l.weights *= 3.7;
        }
        for c in 0..2 {
            let a = position_importance(&m, c).unwrap().importance;
            let b = position_importance(&scaled, c).unwrap().importance;
            let rank = |v: &[f64]| {
                let mut idx: Vec<usize> = (0..v.len()).collect();
                idx.sort_by(|&i, &j| v[j].total_cmp(&v[i]).then(i.cmp(&j)));
                idx
            };
            assert_eq!(rank(&a), rank(&b));
        }
        let positions: Vec<usize> = (1..=8).collect();
        let ra = local_report(&m, &x, &positions).unwrap();
        let rb = local_report(&scaled, &x, &positions).unwrap();
        let classes = |r: &LocalReport| r.entries.iter().map(|e| (e.position, e.assigned_class)).collect::<Vec<_>>();
        assert_eq!(classes(&ra), classes(&rb));
    }
}

#[test]
fn logo_heights() {
    let dna = Alphabet::dna();
    let one = MotifNpfm::from_counts(4, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
    let svg = emit_logo(&one, &dna);
    assert_eq!(svg.matches("<text").count(), 1);
    assert!(svg.contains("data-height=\"1.00000\">G<"));
    let two = MotifNpfm::from_counts(4, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
    let svg = emit_logo(&two, &dna);
    assert_eq!(svg.matches("data-height=\"0.50000\"").count(), 2);
}

#[test]
fn logo_golden_file() {
    let dna = Alphabet::dna();
    let m = MotifNpfm::from_counts(4, vec![3.0, 4.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
    assert_eq!(emit_logo(&m, &dna), include_str!("../../tests/golden/logo.svg"));
}
