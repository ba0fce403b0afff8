use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use cmkn::interpret::{emit_logo, global_report, local_report, mean_motif_at};
use cmkn::kernel::{gram_tiled, write_gram_csv, write_gram_svm};
use cmkn::metrics::{aggregate_folds, compute_metrics, AggregateReport, MetricsReport};
use cmkn::network::{load_model, predict_batch, save_model, train, CmknModel, ModelConfig};
use cmkn::rng::{seeded, stream};
use cmkn::seqdata::{
    convert_hivdb, generate_synthetic, parse_fasta, stratified_holdout, stratified_kfold, write_fasta, Alphabet,
    Fold, LabelPolicy, LabeledDataset, ResistanceThresholds, SyntheticConfig,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{
    require, CvConfig, EvalConfig, GramConfig, HivdbConfig, InterpretConfig, KernelSpec, SynthConfig, TrainRunConfig,
};
use crate::error::{CliError, Result};
use crate::Format;

/// Output directory that refuses to overwrite files unless forced.
#[derive(Debug, Clone)]
pub struct OutDir {
    pub dir: PathBuf,
    pub force: bool,
}

impl OutDir {
    pub fn new(dir: impl Into<PathBuf>, force: bool) -> Self {
        OutDir { dir: dir.into(), force }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn claim(&self, name: &str) -> Result<PathBuf> {
        let path = self.path(name);
        if path.exists() && !self.force {
            return Err(CliError::Exists(path.display().to_string()));
        }
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        Ok(path)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.claim(name)?;
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    /// Writes the resolved configuration as `config.json`.
    pub fn write_config<T: Serialize>(&self, cfg: &T) -> Result<PathBuf> {
        self.write("config.json", &to_json(cfg)?)
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(cmkn::Error::from)?;
    s.push('\n');
    Ok(s)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn read_dataset(path: &Path, alphabet: &Alphabet, policy: LabelPolicy) -> Result<LabeledDataset> {
    Ok(parse_fasta(&read(path)?, alphabet, policy)?)
}

fn uniform_length(ds: &LabeledDataset) -> Result<usize> {
    ds.uniform_length()
        .ok_or_else(|| CliError::Data("sequences must all have the same length".into()))
}

fn binary_labels(ds: &LabeledDataset) -> Result<Vec<usize>> {
    if ds.num_classes() != 2 {
        return Err(CliError::Data(format!("expected two classes, found {}", ds.num_classes())));
    }
    Ok(ds.labels()?)
}

/// Probability of class 1 for every sequence.
fn positive_scores(model: &CmknModel, ds: &LabeledDataset) -> Result<Vec<f64>> {
    Ok(predict_batch(model, &ds.sequences)?.iter().map(|p| p[1]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: SyntheticConfig,
    /// Embedded consensus of each class, column-wise argmax.
    pub consensus: Vec<String>,
    /// 1-based motif start in each sequence.
    pub motif_starts: Vec<usize>,
}

/// Writes `synthetic.fasta` and `ground_truth.json`.
pub fn cmd_synth(cfg: &SynthConfig, out: &OutDir) -> Result<()> {
    let c = &cfg.synthetic;
    let data = generate_synthetic(c, &mut seeded(c.seed, stream::SYNTHETIC))?;
    let truth = GroundTruth {
        config: c.clone(),
        consensus: c.classes.iter().map(|m| m.argmax_consensus()).collect(),
        motif_starts: data.motif_starts,
    };
    out.write_config(cfg)?;
    out.write("synthetic.fasta", &write_fasta(&data.dataset))?;
    out.write("ground_truth.json", &to_json(&truth)?)?;
    log::info!("wrote {} sequences to {}", data.dataset.len(), out.dir.display());
    Ok(())
}

/// Trains one model; writes `model.json`, `history.csv` and, with a
/// validation fraction, `validation_metrics.json`.
pub fn cmd_train(cfg: &TrainRunConfig, out: &OutDir) -> Result<CmknModel> {
    if !(0.0..1.0).contains(&cfg.validation_fraction) {
        return Err(CliError::Config("validation_fraction must be in [0, 1)".into()));
    }
    cfg.train.validate()?;
    let data = require(&cfg.data, "data path")?;
    let ds = read_dataset(&data, &cfg.alphabet.alphabet(), LabelPolicy::Required)?;
    let params = cfg.kernel.resolve(uniform_length(&ds)?)?;
    for name in ["config.json", "model.json", "history.csv"] {
        out.claim(name)?;
    }
    let (train_ds, valid_ds) = if cfg.validation_fraction > 0.0 {
        let fold = stratified_holdout(&ds.labels()?, cfg.validation_fraction, cfg.train.seed)?;
        (ds.subset(&fold.train), Some(ds.subset(&fold.validation)))
    } else {
        (ds, None)
    };
    let (model, history) = train(&train_ds, &params, &cfg.model, &cfg.train)?;
    out.write_config(cfg)?;
    save_model(&model, &out.claim("model.json")?)?;
    out.write("history.csv", &history.to_csv())?;
    if let Some(v) = valid_ds {
        let report = compute_metrics(&binary_labels(&v)?, &positive_scores(&model, &v)?, cmkn::metrics::DEFAULT_THRESHOLD)?;
        out.write("validation_metrics.json", &to_json(&report)?)?;
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub sigma: f64,
    pub num_anchors: usize,
    pub folds: Vec<MetricsReport>,
    pub aggregate: AggregateReport,
}

impl GridResult {
    fn selection_metrics(&self) -> [f64; 4] {
        let a = &self.aggregate;
        [
            a.accuracy.mean,
            a.f1.mean,
            a.auroc.map_or(f64::NEG_INFINITY, |m| m.mean),
            a.mcc.mean,
        ]
    }
}

/// Index of the grid point that is best on the most of accuracy, F1,
/// auROC and MCC (mean over folds); ties go to higher MCC, then fewer
/// anchors, then the earlier point.
pub fn select_grid_point(results: &[GridResult]) -> Option<usize> {
    let metrics: Vec<[f64; 4]> = results.iter().map(GridResult::selection_metrics).collect();
    let wins: Vec<usize> = (0..results.len())
        .map(|i| {
            (0..4)
                .filter(|&m| {
                    let best = metrics.iter().map(|v| v[m]).fold(f64::NEG_INFINITY, f64::max);
                    metrics[i][m] == best
                })
                .count()
        })
        .collect();
    (0..results.len()).reduce(|best, i| {
        let better = wins[i]
            .cmp(&wins[best])
            .then(metrics[i][3].total_cmp(&metrics[best][3]))
            .then(results[best].num_anchors.cmp(&results[i].num_anchors));
        if better.is_gt() {
            i
        } else {
            best
        }
    })
}

pub fn fold_hash(folds: &[Fold]) -> Result<String> {
    let text = serde_json::to_string(folds).map_err(cmkn::Error::from)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

#[derive(Serialize)]
struct Selection<'a> {
    sigma: f64,
    num_anchors: usize,
    aggregate: &'a AggregateReport,
}

/// Stratified k-fold cross-validation over the σ × anchors grid with one
/// fixed set of folds.
pub fn cmd_cv(cfg: &CvConfig, out: &OutDir) -> Result<Vec<GridResult>> {
    cfg.train.validate()?;
    let data = require(&cfg.data, "data path")?;
    let ds = read_dataset(&data, &cfg.alphabet.alphabet(), LabelPolicy::Required)?;
    let len = uniform_length(&ds)?;
    let labels = binary_labels(&ds)?;
    let folds = stratified_kfold(&labels, cfg.folds, cfg.train.seed)?;
    let hash = fold_hash(&folds)?;
    for name in ["config.json", "folds.json", "fold_metrics.csv", "aggregate.csv", "selection.json"] {
        out.claim(name)?;
    }
    let mut results = Vec::new();
    for (sigma, num_anchors) in cfg.grid_points() {
        let params = KernelSpec { sigma, ..cfg.kernel }.resolve(len)?;
        let model_cfg = ModelConfig { num_anchors, ..cfg.model.clone() };
        log::info!("grid point sigma={sigma} anchors={num_anchors}");
        let reports = folds
            .par_iter()
            .map(|f| {
                let tr = ds.subset(&f.train);
                let va = ds.subset(&f.validation);
                let (model, _) = train(&tr, &params, &model_cfg, &cfg.train)?;
                let scores = positive_scores(&model, &va)?;
                Ok(compute_metrics(&va.labels()?, &scores, cmkn::metrics::DEFAULT_THRESHOLD)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let aggregate = aggregate_folds(&reports)?;
        results.push(GridResult { sigma, num_anchors, folds: reports, aggregate });
    }

    let mut per_fold = format!("sigma,num_anchors,fold,fold_hash,{}\n", MetricsReport::CSV_HEADER);
    let mut agg = format!("sigma,num_anchors,{}\n", AggregateReport::CSV_HEADER);
    for r in &results {
        for (i, m) in r.folds.iter().enumerate() {
            per_fold.push_str(&format!("{},{},{},{hash},{}\n", r.sigma, r.num_anchors, i + 1, m.csv_row()));
        }
        agg.push_str(&format!("{},{},{}\n", r.sigma, r.num_anchors, r.aggregate.csv_row()));
    }
    let best = &results[select_grid_point(&results).expect("grid is never empty")];
    out.write_config(cfg)?;
    out.write("folds.json", &to_json(&serde_json::json!({ "hash": hash, "folds": folds }))?)?;
    out.write("fold_metrics.csv", &per_fold)?;
    out.write("aggregate.csv", &agg)?;
    out.write(
        "selection.json",
        &to_json(&Selection { sigma: best.sigma, num_anchors: best.num_anchors, aggregate: &best.aggregate })?,
    )?;
    Ok(results)
}

pub fn cmd_eval(cfg: &EvalConfig, format: Format, out: &OutDir) -> Result<MetricsReport> {
    let model = load_model(&require(&cfg.model, "model path")?)?;
    let ds = read_dataset(&require(&cfg.data, "data path")?, &model.alphabet, LabelPolicy::Required)?;
    if model.num_classes() != 2 {
        return Err(CliError::Data("evaluation needs a binary model".into()));
    }
    let labels = ds.labels()?;
    let report = compute_metrics(&labels, &positive_scores(&model, &ds)?, cfg.threshold)?;
    out.write_config(cfg)?;
    match format {
        Format::Json => out.write("metrics.json", &to_json(&report)?)?,
        Format::Csv => out.write("metrics.csv", &format!("{}\n{}\n", MetricsReport::CSV_HEADER, report.csv_row()))?,
        Format::Svm => return Err(CliError::Config("metrics support csv or json".into())),
    };
    Ok(report)
}

pub fn cmd_gram(cfg: &GramConfig, format: Format, out: &OutDir) -> Result<()> {
    let ds = read_dataset(&require(&cfg.data, "data path")?, &cfg.alphabet.alphabet(), LabelPolicy::Optional)?;
    let len = match cfg.kernel.beta {
        Some(_) => ds.sequences.iter().map(|s| s.len()).max().unwrap_or(0),
        None => uniform_length(&ds)?,
    };
    let params = cfg.kernel.resolve(len)?;
    let g = gram_tiled(&ds, &params, cfg.tile.max(1))?;
    out.write_config(cfg)?;
    match format {
        Format::Csv => out.write("gram.csv", &write_gram_csv(&g))?,
        Format::Svm => {
            let labels: Vec<Option<usize>> = ds.sequences.iter().map(|s| s.label).collect();
            out.write("gram.svm", &write_gram_svm(&g, &labels)?)?
        }
        Format::Json => {
            let rows: Vec<Vec<f64>> = g.row_iter().map(|r| r.iter().copied().collect()).collect();
            let ids: Vec<&str> = ds.sequences.iter().map(|s| s.id.as_str()).collect();
            out.write("gram.json", &to_json(&serde_json::json!({ "ids": ids, "matrix": rows }))?)?
        }
    };
    Ok(())
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Global report (JSON and CSV), one logo per peak and, given an input
/// FASTA, one local report per record.
pub fn cmd_interpret(cfg: &InterpretConfig, out: &OutDir) -> Result<()> {
    let model = load_model(&require(&cfg.model, "model path")?)?;
    let report = global_report(&model, cfg.window, cfg.top)?;
    let local_ds = match &cfg.input {
        Some(p) => Some(read_dataset(p, &model.alphabet, LabelPolicy::Optional)?),
        None => None,
    };
    out.write_config(cfg)?;
    out.write("global.json", &report.to_json()?)?;
    out.write("global.csv", &report.to_csv())?;
    let mut positions = BTreeSet::new();
    for (name, class) in &report.classes {
        for (rank, peak) in class.peaks.iter().enumerate() {
            positions.insert(peak.position);
            if let Some(npfm) = mean_motif_at(&model, peak.position, class.class)?.npfm {
                let file = format!("logos/{}_peak{}_pos{}.svg", file_stem(name), rank + 1, peak.position);
                out.write(&file, &emit_logo(&npfm, &model.alphabet))?;
            }
        }
    }
    if let Some(ds) = local_ds {
        let positions: Vec<usize> = positions.into_iter().collect();
        let reports = ds
            .sequences
            .par_iter()
            .map(|x| local_report(&model, x, &positions))
            .collect::<cmkn::Result<Vec<_>>>()?;
        for (i, r) in reports.iter().enumerate() {
            out.write(&format!("local/{:05}_{}.json", i + 1, file_stem(&r.sequence_id)), &to_json(r)?)?;
        }
    }
    Ok(())
}

/// Reference sequence from a plain or FASTA file.
fn read_reference(path: &Path) -> Result<String> {
    Ok(read(path)?
        .lines()
        .filter(|l| !l.starts_with('>'))
        .flat_map(|l| l.chars().filter(|c| !c.is_whitespace()))
        .collect())
}

pub fn cmd_hivdb_convert(cfg: &HivdbConfig, out: &OutDir) -> Result<()> {
    let drug = require(&cfg.drug, "drug name")?;
    let thresholds = ResistanceThresholds::new(require(&cfg.low, "low threshold")?, require(&cfg.high, "high threshold")?)?;
    let table = read(&require(&cfg.table, "table path")?)?;
    let reference = read_reference(&require(&cfg.reference, "reference path")?)?;
    let fasta = convert_hivdb(&table, &reference, thresholds, &drug).map_err(|e| match e {
        cmkn::Error::InvalidArgument(m) => CliError::Data(m),
        e => e.into(),
    })?;
    out.write_config(cfg)?;
    out.write(&format!("{}.fasta", file_stem(&drug)), &fasta)?;
    Ok(())
}
