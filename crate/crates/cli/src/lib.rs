//! Command-line front end for convolutional motif kernel networks.
//!
//! Each subcommand reads an optional JSON config (`--config`), applies the
//! command-line overrides, validates, and writes its outputs together with
//! the resolved `config.json` into `--out-dir`. Rerunning with that config
//! and one thread reproduces the outputs byte for byte.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{
    cmd_cv, cmd_eval, cmd_gram, cmd_hivdb_convert, cmd_interpret, cmd_synth, cmd_train, fold_hash, select_grid_point,
    GridResult, GroundTruth, OutDir,
};
pub use error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svm,
}

#[derive(Debug, Parser)]
#[command(name = "cmkn", version, about = "Convolutional motif kernel networks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON configuration for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    pub force: bool,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic two-motif DNA dataset.
    Synth,
    /// Train one model.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Cross-validate over a grid of σ and anchor counts.
    Cv {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Evaluate a saved model on labeled data.
    Eval {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Export the sequence kernel Gram matrix.
    Gram {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Global and local interpretation reports with motif logos.
    Interpret {
        #[arg(long)]
        model: Option<PathBuf>,
        /// FASTA with sequences to explain.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Convert an HIVdb genotype-phenotype table into labeled FASTA.
    HivdbConvert {
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        drug: Option<String>,
        #[arg(long)]
        low: Option<f64>,
        #[arg(long)]
        high: Option<f64>,
    },
}

fn set<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let out = OutDir::new(&g.out_dir, g.force);
    let cfg_path = g.config.as_deref();
    match cli.command {
        Command::Synth => {
            let mut cfg: config::SynthConfig = config::load(cfg_path)?;
            if let Some(s) = g.seed {
                cfg.synthetic.seed = s;
            }
            cmd_synth(&cfg, &out)
        }
        Command::Train { data } => {
            let mut cfg: config::TrainRunConfig = config::load(cfg_path)?;
            set(&mut cfg.data, data);
            if let Some(s) = g.seed {
                cfg.train.seed = s;
            }
            cmd_train(&cfg, &out).map(drop)
        }
        Command::Cv { data } => {
            let mut cfg: config::CvConfig = config::load(cfg_path)?;
            set(&mut cfg.data, data);
            if let Some(s) = g.seed {
                cfg.train.seed = s;
            }
            cmd_cv(&cfg, &out).map(drop)
        }
        Command::Eval { model, data } => {
            let mut cfg: config::EvalConfig = config::load(cfg_path)?;
            set(&mut cfg.model, model);
            set(&mut cfg.data, data);
            cmd_eval(&cfg, g.format.unwrap_or(Format::Json), &out).map(drop)
        }
        Command::Gram { data } => {
            let mut cfg: config::GramConfig = config::load(cfg_path)?;
            set(&mut cfg.data, data);
            cmd_gram(&cfg, g.format.unwrap_or(Format::Csv), &out)
        }
        Command::Interpret { model, input } => {
            let mut cfg: config::InterpretConfig = config::load(cfg_path)?;
            set(&mut cfg.model, model);
            set(&mut cfg.input, input);
            cmd_interpret(&cfg, &out)
        }
        Command::HivdbConvert { table, reference, drug, low, high } => {
            let mut cfg: config::HivdbConfig = config::load(cfg_path)?;
            set(&mut cfg.table, table);
            set(&mut cfg.reference, reference);
            set(&mut cfg.drug, drug);
            set(&mut cfg.low, low);
            set(&mut cfg.high, high);
            cmd_hivdb_convert(&cfg, &out)
        }
    }
}

/// Runs a parsed command line inside a thread pool of the requested size.
pub fn run(cli: Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| dispatch(cli))
}

/// Parses `args`, runs, reports errors on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
