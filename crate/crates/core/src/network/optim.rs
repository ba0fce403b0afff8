use serde::{Deserialize, Serialize};

/// Bias-corrected Adam with one moment buffer per parameter slot.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(slot_sizes: &[usize]) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: slot_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: slot_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Advances the step counter; call once before updating the slots of one step.
    pub fn begin_step(&mut self) {
        self.step += 1;
    }

    /// Updates `params` of `slot` in place.
    pub fn update(&mut self, slot: usize, params: &mut [f64], grads: &[f64], lr: f64) {
        assert!(self.step > 0, "begin_step must precede update");
        assert_eq!(params.len(), grads.len());
        let (b1, b2) = (self.beta1, self.beta2);
        let t = self.step as i32;
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        let (m, v) = (&mut self.m[slot], &mut self.v[slot]);
        for i in 0..params.len() {
            let g = grads[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            let mhat = m[i] / c1;
            let vhat = v[i] / c2;
            params[i] -= lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauConfig {
    pub factor: f64,
    pub patience: usize,
    /// Relative improvement needed to reset the counter.
    pub threshold: f64,
    pub min_lr: f64,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        PlateauConfig {
            factor: 0.1,
            patience: 10,
            threshold: 1e-4,
            min_lr: 0.0,
        }
    }
}

/// Multiplies the learning rate by `factor` once the loss has not improved
/// for `patience` consecutive epochs.
#[derive(Debug, Clone)]
pub struct ReduceLrOnPlateau {
    pub config: PlateauConfig,
    lr: f64,
    best: f64,
    num_bad: usize,
}

impl ReduceLrOnPlateau {
    pub fn new(lr: f64, config: PlateauConfig) -> Self {
        ReduceLrOnPlateau {
            config,
            lr,
            best: f64::INFINITY,
            num_bad: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Records an epoch loss and returns the learning rate for the next epoch.
    pub fn step(&mut self, loss: f64) -> f64 {
        if loss < self.best * (1.0 - self.config.threshold) || self.best == f64::INFINITY {
            self.best = loss;
            self.num_bad = 0;
        } else {
            self.num_bad += 1;
        }
        if self.num_bad >= self.config.patience {
            self.lr = (self.lr * self.config.factor).max(self.config.min_lr);
            self.num_bad = 0;
        }
        self.lr
    }
}
