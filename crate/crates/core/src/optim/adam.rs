use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::matlib::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub bias_correction: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            bias_correction: true,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            (0.0..1.0).contains(&self.beta1),
            Config,
            "adam beta1 must be in [0, 1)"
        );
        ensure!(
            (0.0..1.0).contains(&self.beta2),
            Config,
            "adam beta2 must be in [0, 1)"
        );
        ensure!(self.eps >= 0.0, Config, "adam eps must be non-negative");
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Matrix,
    pub v: Matrix,
    pub step: u64,
    pub cfg: AdamConfig,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize, cfg: AdamConfig) -> Self {
        Self {
            m: Matrix::zeros(rows, cols),
            v: Matrix::zeros(rows, cols),
            step: 0,
            cfg,
        }
    }

    /// Advances the moments with `g` and returns `−lr·m̂/(√v̂ + ε)`.
    pub fn step(&mut self, g: &Matrix, lr: f64) -> Result<Matrix> {
        self.step += 1;
        let c = &self.cfg;
        self.m.axpby(c.beta1, 1.0 - c.beta1, g)?;
        self.v.axpby(c.beta2, 1.0 - c.beta2, &g.square())?;
        let (bc1, bc2) = if c.bias_correction {
            let t = self.step as i32;
            (1.0 - c.beta1.powi(t), 1.0 - c.beta2.powi(t))
        } else {
            (1.0, 1.0)
        };
        let eps = c.eps;
        Ok(self
            .m
            .zip_map(&self.v, |m, v| -lr * (m / bc1) / ((v / bc2).sqrt() + eps)))
    }
}
