//! Per-command run configurations.
//!
//! Every field has a default, so a config file only lists what it changes.
//! Unknown fields are rejected.

use std::path::{Path, PathBuf};

use cmkn::kernel::{default_beta, KernelParams};
use cmkn::network::{ModelConfig, TrainConfig};
use cmkn::seqdata::{Alphabet, SyntheticConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphabetName {
    Dna,
    Protein,
}

impl AlphabetName {
    pub fn alphabet(self) -> Alphabet {
        match self {
            AlphabetName::Dna => Alphabet::dna(),
            AlphabetName::Protein => Alphabet::protein(),
        }
    }
}

/// Kernel parameters; a missing `beta` resolves to `L²/10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSpec {
    pub k: usize,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub sigma: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            k: 5,
            alpha: 1.0,
            beta: None,
            sigma: 4.0,
        }
    }
}

impl KernelSpec {
    pub fn resolve(&self, len: usize) -> Result<KernelParams> {
        let beta = self.beta.unwrap_or_else(|| default_beta(len));
        KernelParams::new(self.k, self.alpha, beta, self.sigma).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub synthetic: SyntheticConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRunConfig {
    pub data: Option<PathBuf>,
    pub alphabet: AlphabetName,
    pub kernel: KernelSpec,
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Stratified fraction held out for evaluation; 0 trains on everything.
    pub validation_fraction: f64,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        TrainRunConfig {
            data: None,
            alphabet: AlphabetName::Dna,
            kernel: KernelSpec::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            validation_fraction: 0.0,
        }
    }
}

/// Values searched by cross-validation; empty lists fall back to the
/// kernel and model settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub sigma: Vec<f64>,
    pub num_anchors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub data: Option<PathBuf>,
    pub alphabet: AlphabetName,
    pub kernel: KernelSpec,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub folds: usize,
    pub grid: Grid,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            data: None,
            alphabet: AlphabetName::Dna,
            kernel: KernelSpec::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            folds: 5,
            grid: Grid::default(),
        }
    }
}

impl CvConfig {
    /// `(σ, anchors)` pairs in evaluation order.
    pub fn grid_points(&self) -> Vec<(f64, usize)> {
        let sigmas = if self.grid.sigma.is_empty() { vec![self.kernel.sigma] } else { self.grid.sigma.clone() };
        let anchors = if self.grid.num_anchors.is_empty() {
            vec![self.model.num_anchors]
        } else {
            self.grid.num_anchors.clone()
        };
        sigmas.iter().flat_map(|&s| anchors.iter().map(move |&n| (s, n))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            model: None,
            data: None,
            threshold: cmkn::metrics::DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GramConfig {
    pub data: Option<PathBuf>,
    pub alphabet: AlphabetName,
    pub kernel: KernelSpec,
    pub tile: usize,
}

impl Default for GramConfig {
    fn default() -> Self {
        GramConfig {
            data: None,
            alphabet: AlphabetName::Dna,
            kernel: KernelSpec::default(),
            tile: cmkn::kernel::DEFAULT_TILE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpretConfig {
    pub model: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub window: usize,
    pub top: usize,
}

impl Default for InterpretConfig {
    fn default() -> Self {
        InterpretConfig {
            model: None,
            input: None,
            window: cmkn::interpret::DEFAULT_PEAK_WINDOW,
            top: cmkn::interpret::DEFAULT_TOP_PEAKS,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HivdbConfig {
    pub table: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub drug: Option<String>,
    pub low: Option<f64>,
    pub high: Option<f64>,
}

/// Reads `path` as `T`, or returns the defaults.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn require<T: Clone>(v: &Option<T>, what: &str) -> Result<T> {
    v.clone().ok_or_else(|| CliError::Config(format!("missing {what}")))
}
