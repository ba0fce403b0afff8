use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Activation of a dense layer. Only the identity is supported: position
/// importances are read off the weights and need a linear head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Identity,
}

impl std::str::FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::invalid(format!(
                "activation '{other}' is not supported; dense layers must be linear"
            ))),
        }
    }
}

/// `y = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: DMatrix<f64>, bias: DVector<f64>) -> Result<Self> {
        if weights.nrows() != bias.len() {
            return Err(Error::invalid(format!(
                "weights have {} rows but bias has {} entries",
                weights.nrows(),
                bias.len()
            )));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("dense parameters must be finite"));
        }
        Ok(DenseLayer {
            weights,
            bias,
            activation: Activation::Identity,
        })
    }

    /// Uniform on `±1/√in` for weights and bias.
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let weights = DMatrix::from_fn(outputs, inputs, |_, _| rng.random_range(-bound..bound));
        let bias = DVector::from_fn(outputs, |_, _| rng.random_range(-bound..bound));
        DenseLayer {
            weights,
            bias,
            activation: Activation::Identity,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.weights * x + &self.bias
    }

    /// Column-wise forward of a batch `inputs × B`.
    pub fn forward_batch(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = &self.weights * x;
        for mut col in y.column_iter_mut() {
            col += &self.bias;
        }
        y
    }

    pub(crate) fn to_file(&self) -> DenseFile {
        DenseFile {
            weights: self.weights.row_iter().map(|r| r.iter().copied().collect()).collect(),
            bias: self.bias.iter().copied().collect(),
            activation: self.activation,
        }
    }

    pub(crate) fn from_file(f: &DenseFile) -> Result<Self> {
        let rows = f.weights.len();
        let cols = f.weights.first().map_or(0, Vec::len);
        if f.weights.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged dense weight matrix"));
        }
        let w = DMatrix::from_fn(rows, cols, |i, j| f.weights[i][j]);
        let mut layer = DenseLayer::new(w, DVector::from_vec(f.bias.clone()))?;
        layer.activation = f.activation;
        Ok(layer)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct DenseFile {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}
