//! Finite-difference checks of the full network gradient.

use cmkn::kernel::KernelParams;
use cmkn::network::{batch_gradient, init_model, CmknModel, Head, LossKind, ModelConfig};
use cmkn::nystroem::InitOptions;
use cmkn::rng::seeded;
use cmkn::seqdata::{encode_sequence, Alphabet, EncodedSequence, LabeledDataset};
use rand::Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn dataset(seed: u64, len: usize, n: usize) -> LabeledDataset {
    let dna = Alphabet::dna();
    let mut rng = seeded(seed, 0);
    let seqs = (0..n)
        .map(|i| {
            let s: String = (0..len).map(|_| dna.symbol(rng.random_range(0..4))).collect();
            let mut e = encode_sequence(&s, &dna).unwrap();
            e.label = Some(i % 2);
            e.id = format!("s{i}");
            e
        })
        .collect();
    LabeledDataset::new(dna, seqs, vec!["0".into(), "1".into()]).unwrap()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn loss_of(m: &CmknModel, seqs: &[&EncodedSequence], labels: &[usize], w: &[f64], kind: LossKind) -> f64 {
    let mut m = m.clone();
    m.anchors.refresh(&m.params).unwrap();
    batch_gradient(&m, seqs, labels, w, kind, false).unwrap().loss
}

fn check_model(seed: u64, kind: LossKind) -> usize {
    let mut rng = seeded(seed, 99);
    let k = 1 + (seed as usize % 3);
    let len = k + 2 + (seed as usize % 4);
    let ds = dataset(seed, len, 6);
    let params = KernelParams::new(k, 0.8, 5.0, 1.0).unwrap();
    let cfg = ModelConfig {
        num_anchors: 4,
        hidden: vec![8],
        init: InitOptions { samples: Some(40), ..InitOptions::default() },
        ..ModelConfig::default()
    };
    let head = if kind == LossKind::BceLogits { Head::SingleLogit } else { Head::Softmax };
    let mut model = init_model(&ds, &params, &cfg, head, seed).unwrap();
    // move anchors off the constraint set so the raw gradient is exercised
    for v in model.anchors.motifs_mut().iter_mut() {
        *v += 0.05 * (rng.random::<f64>() - 0.5);
    }
    model.anchors.refresh(&params).unwrap();
    let seqs: Vec<&EncodedSequence> = ds.sequences.iter().collect();
    let labels = ds.labels().unwrap();
    let w = [0.7, 1.3];
    let g = batch_gradient(&model, &seqs, &labels, &w, kind, false).unwrap().grad;
    let mut checked = 0;
    let mut check = |an: f64, plus: &CmknModel, minus: &CmknModel, what: &str| {
        let fd = (loss_of(plus, &seqs, &labels, &w, kind) - loss_of(minus, &seqs, &labels, &w, kind)) / (2.0 * H);
        assert!(rel_err(an, fd) <= TOL, "seed {seed} {what}: analytic {an:e} vs fd {fd:e}");
        checked += 1;
    };
    for l in 0..model.layers.len() {
        let (rows, cols) = model.layers[l].weights.shape();
        for _ in 0..6 {
            let (r, c) = (rng.random_range(0..rows), rng.random_range(0..cols));
            let (mut p, mut m) = (model.clone(), model.clone());
            p.layers[l].weights[(r, c)] += H;
            m.layers[l].weights[(r, c)] -= H;
            check(g.dense[l].0[(r, c)], &p, &m, "dense weight");
        }
        let r = rng.random_range(0..rows);
        let (mut p, mut m) = (model.clone(), model.clone());
        p.layers[l].bias[r] += H;
        m.layers[l].bias[r] -= H;
        check(g.dense[l].1[r], &p, &m, "bias");
    }
    for i in 0..model.anchors.len() {
        for j in 0..model.anchors.motifs().ncols() {
            let (mut p, mut m) = (model.clone(), model.clone());
            p.anchors.motifs_mut()[(i, j)] += H;
            m.anchors.motifs_mut()[(i, j)] -= H;
            check(g.anchors.motifs[(i, j)], &p, &m, "anchor motif");
        }
        for j in 0..2 {
            let (mut p, mut m) = (model.clone(), model.clone());
            p.anchors.positions_mut()[(i, j)] += H;
            m.anchors.positions_mut()[(i, j)] -= H;
            check(g.anchors.positions[(i, j)], &p, &m, "anchor position");
        }
    }
    checked
}

#[test]
fn end_to_end_softmax_gradients() {
    for seed in 0..10 {
        assert!(check_model(seed, LossKind::ClassBalancedCe) > 0);
    }
}

#[test]
fn end_to_end_bce_gradients() {
    for seed in 10..20 {
        assert!(check_model(seed, LossKind::BceLogits) > 0);
    }
}
