use std::fs;
use std::path::{Path, PathBuf};

use cmkn::kernel::{k_pam, KernelParams};
use cmkn::metrics::{AggregateReport, MeanStd};
use cmkn::seqdata::{encode_sequence, Alphabet, SyntheticConfig};
use cmkn_cli::config::SynthConfig;
use cmkn_cli::{main_with_args, select_grid_point, GridResult, GroundTruth};
use serde_json::{json, Value};

fn run(args: &[&str]) -> i32 {
    let mut all = vec!["cmkn"];
    all.extend_from_slice(args);
    main_with_args(all)
}

fn write_json(dir: &Path, name: &str, v: Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, v.to_string()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small synthetic dataset written by `synth`; returns the FASTA path.
fn synth_data(dir: &Path, n: usize, seed: &str) -> PathBuf {
    let mut cfg = serde_json::to_value(SynthConfig::default()).unwrap();
    cfg["synthetic"]["num_sequences"] = n.into();
    let c = write_json(dir, "synth_cfg.json", cfg);
    let out = dir.join("data");
    assert_eq!(run(&["synth", "--config", s(&c), "--seed", seed, "--out-dir", s(&out), "--force"]), 0);
    out.join("synthetic.fasta")
}

fn tiny_train(dir: &Path, data: &Path, epochs: usize) -> PathBuf {
    write_json(
        dir,
        "train_cfg.json",
        json!({
            "data": data,
            "model": { "num_anchors": 6, "hidden": [], "init": { "samples": 300 } },
            "train": { "epochs": epochs, "lr": 0.05, "loss": "bce_logits" }
        }),
    )
}

#[test]
fn synth_defaults_and_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    assert_eq!(run(&["synth", "--out-dir", s(&out)]), 0);
    let truth: GroundTruth = serde_json::from_str(&fs::read_to_string(out.join("ground_truth.json")).unwrap()).unwrap();
    assert_eq!(truth.config, SyntheticConfig::default());
    assert_eq!(truth.config.num_sequences, 1000);
    assert_eq!(truth.config.sequence_length, 100);
    assert_eq!((truth.config.classes[0].center, truth.config.classes[1].center), (20, 80));
    assert_eq!(truth.motif_starts.len(), 1000);
    let resolved: SynthConfig = serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(resolved.synthetic, truth.config);

    let again = dir.path().join("b");
    assert_eq!(run(&["synth", "--out-dir", s(&again)]), 0);
    let other = dir.path().join("c");
    assert_eq!(run(&["synth", "--seed", "9", "--out-dir", s(&other)]), 0);
    let fasta = |d: &Path| fs::read(d.join("synthetic.fasta")).unwrap();
    assert_eq!(fasta(&out), fasta(&again));
    assert_ne!(fasta(&out), fasta(&other));
}

#[test]
fn train_writes_artifacts_and_refuses_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_data(dir.path(), 40, "2");
    let cfg = tiny_train(dir.path(), &data, 4);
    let out = dir.path().join("model");
    assert_eq!(run(&["train", "--config", s(&cfg), "--out-dir", s(&out)]), 0);
    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 4);
    assert!(out.join("model.json").exists());
    assert_eq!(run(&["train", "--config", s(&cfg), "--out-dir", s(&out)]), 2);
    assert_eq!(run(&["train", "--config", s(&cfg), "--out-dir", s(&out), "--force"]), 0);
    // the resolved config reproduces the run
    let rerun = dir.path().join("rerun");
    let resolved = out.join("config.json");
    assert_eq!(run(&["train", "--config", s(&resolved), "--out-dir", s(&rerun), "--threads", "1"]), 0);
    assert_eq!(fs::read(out.join("model.json")).unwrap(), fs::read(rerun.join("model.json")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let bad = write_json(dir.path(), "bad.json", json!({ "unknown_field": 1 }));
    assert_eq!(run(&["synth", "--config", s(&bad), "--out-dir", s(&out)]), 2);
    assert_eq!(run(&["train", "--out-dir", s(&out)]), 2);
    assert_eq!(run(&["synth", "--bogus-flag"]), 2);

    let broken = dir.path().join("broken.fasta");
    fs::write(&broken, ">a label=0\nACGZ\n>b label=1\nACGT\n").unwrap();
    assert_eq!(run(&["train", "--data", s(&broken), "--out-dir", s(&out)]), 3);

    let data = synth_data(dir.path(), 30, "3");
    let diverge = write_json(
        dir.path(),
        "diverge.json",
        json!({
            "data": data,
            "model": { "num_anchors": 4, "hidden": [8], "init": { "samples": 200 } },
            "train": { "epochs": 5, "lr": 1e308, "loss": "bce_logits" }
        }),
    );
    assert_eq!(run(&["train", "--config", s(&diverge), "--out-dir", s(&out)]), 4);
}

#[test]
fn eval_memorizing_model_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_data(dir.path(), 24, "4");
    let cfg = write_json(
        dir.path(),
        "train.json",
        json!({
            "data": data,
            "model": { "num_anchors": 12, "hidden": [], "init": { "samples": 300 } },
            "train": { "epochs": 60, "lr": 0.05, "loss": "bce_logits" }
        }),
    );
    let m = dir.path().join("m");
    assert_eq!(run(&["train", "--config", s(&cfg), "--out-dir", s(&m)]), 0);
    let model = m.join("model.json");
    let e = dir.path().join("e");
    assert_eq!(run(&["eval", "--model", s(&model), "--data", s(&data), "--out-dir", s(&e)]), 0);
    let report: Value = serde_json::from_str(&fs::read_to_string(e.join("metrics.json")).unwrap()).unwrap();
    let keys: Vec<&str> = report.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["accuracy", "auprc", "auroc", "f1", "fn", "fp", "mcc", "n_samples", "tn", "tp"]);
    assert!(report["accuracy"].as_f64().unwrap() >= 0.95, "{report}");
    assert!(report["auroc"].as_f64().unwrap() >= 0.95);

    let csv_out = dir.path().join("ecsv");
    assert_eq!(run(&["eval", "--model", s(&model), "--data", s(&data), "--out-dir", s(&csv_out), "--format", "csv"]), 0);
    let csv = fs::read_to_string(csv_out.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("accuracy,f1,mcc,auroc,auprc,tp,fp,tn,fn,n_samples\n"));

    let text = fs::read_to_string(&data).unwrap();
    let negatives: String = text.split('>').filter(|r| r.contains("label=0")).map(|r| format!(">{r}")).collect();
    let single = dir.path().join("neg.fasta");
    fs::write(&single, negatives).unwrap();
    let one = dir.path().join("one");
    assert_eq!(run(&["eval", "--model", s(&model), "--data", s(&single), "--out-dir", s(&one)]), 0);
    let report: Value = serde_json::from_str(&fs::read_to_string(one.join("metrics.json")).unwrap()).unwrap();
    assert!(report["auroc"].is_null());
}

#[test]
fn gram_formats() {
    let dir = tempfile::tempdir().unwrap();
    let fasta = dir.path().join("three.fasta");
    fs::write(&fasta, ">x label=0\nACGTAC\n>y label=1\nAGGTCC\n>z\nTTGTAA\n").unwrap();
    let cfg = write_json(dir.path(), "gram.json", json!({ "kernel": { "k": 2, "sigma": 1.5 } }));
    let out = dir.path().join("g");
    assert_eq!(run(&["gram", "--data", s(&fasta), "--config", s(&cfg), "--out-dir", s(&out)]), 0);
    let csv = fs::read_to_string(out.join("gram.csv")).unwrap();
    assert!(csv.starts_with("n=3\n"));
    let m: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    let dna = Alphabet::dna();
    let seqs: Vec<_> = ["ACGTAC", "AGGTCC", "TTGTAA"].iter().map(|t| encode_sequence(t, &dna).unwrap()).collect();
    let params = KernelParams::new(2, 1.0, 3.6, 1.5).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(m[i][j], m[j][i]);
            let want = k_pam(&seqs[i], &seqs[j], &params).unwrap();
            assert!((m[i][j] - want).abs() <= 1e-12 * want);
        }
    }
    let svm_out = dir.path().join("svm");
    assert_eq!(
        run(&["gram", "--data", s(&fasta), "--config", s(&cfg), "--out-dir", s(&svm_out), "--format", "svm"]),
        0
    );
    let svm = fs::read_to_string(svm_out.join("gram.svm")).unwrap();
    let rows: Vec<&str> = svm.lines().collect();
    assert!(rows[0].starts_with("0 0:1 1:"));
    assert!(rows[1].starts_with("1 0:2 1:"));
    assert!(rows[2].contains(" 3:"));
}

#[test]
fn interpret_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_data(dir.path(), 40, "5");
    let cfg = tiny_train(dir.path(), &data, 3);
    let m = dir.path().join("m");
    assert_eq!(run(&["train", "--config", s(&cfg), "--out-dir", s(&m)]), 0);
    let input = dir.path().join("in.fasta");
    let text = fs::read_to_string(&data).unwrap();
    let records: Vec<String> = text.split('>').skip(1).take(3).map(|r| format!(">{r}")).collect();
    fs::write(&input, records.concat()).unwrap();
    let out = dir.path().join("i");
    let model = m.join("model.json");
    assert_eq!(run(&["interpret", "--model", s(&model), "--input", s(&input), "--out-dir", s(&out)]), 0);
    let local = fs::read_dir(out.join("local")).unwrap().count();
    assert_eq!(local, 3);
    let global: Value = serde_json::from_str(&fs::read_to_string(out.join("global.json")).unwrap()).unwrap();
    let classes: Vec<&str> = global.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(classes, ["0", "1"]);
    let neg = &global["0"];
    let class_keys: Vec<&str> = neg.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(class_keys, ["class", "importance", "normalized", "peaks"]);
    assert_eq!(neg["importance"].as_array().unwrap().len(), 96);
    assert_eq!(neg["peaks"].as_array().unwrap().len(), 10);
    let peak_keys: Vec<&str> = neg["peaks"][0].as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(peak_keys, ["consensus", "mean_motif", "position", "score", "top_letters"]);
    assert!(fs::read_dir(out.join("logos")).unwrap().count() > 0);
    let csv = fs::read_to_string(out.join("global.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 96);
}

#[test]
fn hivdb_convert_command() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.tsv");
    fs::write(&table, "SeqID\tNFV\tP1\tP2\tP3\n1\t0.5\t-\t-\t-\n2\t40\t-\tM\t-\n3\tNA\tK\t-\t-\n").unwrap();
    let reference = dir.path().join("ref.fasta");
    fs::write(&reference, ">wt\nPQI\n").unwrap();
    let out = dir.path().join("h");
    let args = ["hivdb-convert", "--table", s(&table), "--reference", s(&reference), "--drug", "NFV"];
    let mut full = args.to_vec();
    full.extend_from_slice(&["--low", "3", "--high", "20", "--out-dir", s(&out)]);
    assert_eq!(run(&full), 0);
    assert_eq!(fs::read_to_string(out.join("NFV.fasta")).unwrap(), ">1 label=0\nPQI\n>2 label=1\nPMI\n");
    let short = dir.path().join("short.fasta");
    fs::write(&short, "PQ\n").unwrap();
    let mut bad = vec!["hivdb-convert", "--table", s(&table), "--reference", s(&short), "--drug", "NFV"];
    bad.extend_from_slice(&["--low", "3", "--high", "20", "--out-dir", s(&out), "--force"]);
    assert_eq!(run(&bad), 3);
}

fn grid(sigma: f64, anchors: usize, acc: f64, f1: f64, auroc: f64, mcc: f64) -> GridResult {
    let ms = |mean| MeanStd { mean, std: 0.0 };
    GridResult {
        sigma,
        num_anchors: anchors,
        folds: vec![],
        aggregate: AggregateReport {
            folds: 5,
            accuracy: ms(acc),
            f1: ms(f1),
            mcc: ms(mcc),
            auroc: Some(ms(auroc)),
            auprc: None,
        },
    }
}

#[test]
fn selection_rule() {
    // b wins accuracy, F1 and auROC; c wins only MCC
    let table = [
        grid(1.0, 10, 0.80, 0.70, 0.85, 0.60),
        grid(2.0, 10, 0.90, 0.80, 0.90, 0.70),
        grid(4.0, 10, 0.85, 0.75, 0.88, 0.75),
    ];
    assert_eq!(select_grid_point(&table), Some(1));
    // two wins each; higher MCC decides
    let table = [
        grid(1.0, 10, 0.90, 0.80, 0.80, 0.60),
        grid(2.0, 10, 0.80, 0.70, 0.90, 0.70),
    ];
    assert_eq!(select_grid_point(&table), Some(1));
    // full tie; fewer anchors wins
    let table = [grid(1.0, 50, 0.9, 0.8, 0.9, 0.7), grid(1.0, 25, 0.9, 0.8, 0.9, 0.7)];
    assert_eq!(select_grid_point(&table), Some(1));
    assert_eq!(select_grid_point(&[]), None);
}

#[test]
fn cv_reuses_folds() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_data(dir.path(), 30, "6");
    let cfg = write_json(
        dir.path(),
        "cv.json",
        json!({
            "data": data, "folds": 3,
            "model": { "hidden": [], "init": { "samples": 200 } },
            "train": { "epochs": 2, "lr": 0.01 },
            "grid": { "sigma": [2.0, 4.0], "num_anchors": [3, 5] }
        }),
    );
    let out = dir.path().join("cv");
    assert_eq!(run(&["cv", "--config", s(&cfg), "--out-dir", s(&out)]), 0);
    let rows = fs::read_to_string(out.join("fold_metrics.csv")).unwrap();
    let hashes: std::collections::BTreeSet<&str> = rows.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(rows.lines().count(), 1 + 4 * 3);
    assert_eq!(hashes.len(), 1);
    let folds: Value = serde_json::from_str(&fs::read_to_string(out.join("folds.json")).unwrap()).unwrap();
    assert_eq!(folds["hash"].as_str().unwrap(), *hashes.iter().next().unwrap());
    assert_eq!(fs::read_to_string(out.join("aggregate.csv")).unwrap().lines().count(), 5);
    let sel: Value = serde_json::from_str(&fs::read_to_string(out.join("selection.json")).unwrap()).unwrap();
    assert!(sel["num_anchors"].is_u64());

    let single = write_json(
        dir.path(),
        "cv1.json",
        json!({
            "data": data, "folds": 3,
            "model": { "num_anchors": 3, "hidden": [], "init": { "samples": 200 } },
            "train": { "epochs": 2, "lr": 0.01 }
        }),
    );
    let out1 = dir.path().join("cv1");
    assert_eq!(run(&["cv", "--config", s(&single), "--out-dir", s(&out1)]), 0);
    assert_eq!(fs::read_to_string(out1.join("aggregate.csv")).unwrap().lines().count(), 2);
}
