use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::fim::{two_sided_iterate, TWO_SIDED_DEFAULT_ITERS};
use crate::matlib::Matrix;

use super::limiter::{NormGrowthLimiter, DEFAULT_GAMMA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RacsConfig {
    pub beta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub inner_iters: usize,
    pub eps: f64,
}

impl Default for RacsConfig {
    fn default() -> Self {
        Self {
            beta: 0.9,
            alpha: 0.05,
            gamma: DEFAULT_GAMMA,
            inner_iters: TWO_SIDED_DEFAULT_ITERS,
            eps: 1e-8,
        }
    }
}

impl RacsConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            (0.0..1.0).contains(&self.beta),
            Config,
            "racs beta must be in [0, 1)"
        );
        ensure!(self.gamma > 1.0, Config, "racs gamma must exceed 1");
        ensure!(
            self.inner_iters >= 1,
            Config,
            "racs inner_iters must be at least 1"
        );
        ensure!(self.eps >= 0.0, Config, "racs eps must be non-negative");
        Ok(())
    }
}

/// Row-and-column scaled SGD state: the EMAs `s`, `q` and the limiter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RacsState {
    pub s: Vec<f64>,
    pub q: Vec<f64>,
    pub limiter: NormGrowthLimiter,
    pub step: u64,
    pub cfg: RacsConfig,
}

impl RacsState {
    pub fn new(rows: usize, cols: usize, cfg: RacsConfig) -> Self {
        let limiter = NormGrowthLimiter::new(cfg.gamma);
        Self {
            s: vec![0.0; cols],
            q: vec![0.0; rows],
            limiter,
            step: 0,
            cfg,
        }
    }

    /// The scaled gradient `diag(q)^(-1/2)·G·diag(s)^(-1/2)` after folding
    /// `g` into the EMAs, before the limiter.
    pub fn scaled_gradient(&mut self, g: &Matrix) -> Result<Matrix> {
        ensure!(
            g.shape() == (self.q.len(), self.s.len()),
            Dimension,
            "racs state is {}x{}",
            self.q.len(),
            self.s.len()
        );
        ensure!(g.is_finite(), Numeric, "non-finite gradient");
        self.step += 1;
        let (st, qt) = two_sided_iterate(&g.square(), &vec![1.0; g.rows()], self.cfg.inner_iters);
        let b = self.cfg.beta;
        for (x, y) in self.s.iter_mut().zip(&st) {
            *x = b * *x + (1.0 - b) * y;
        }
        for (x, y) in self.q.iter_mut().zip(&qt) {
            *x = b * *x + (1.0 - b) * y;
        }
        let eps = self.cfg.eps;
        let left: Vec<f64> = self.q.iter().map(|&x| guarded_rsqrt(x, eps)).collect();
        let right: Vec<f64> = self.s.iter().map(|&x| guarded_rsqrt(x, eps)).collect();
        Ok(g.scale_rows_cols(&left, &right))
    }

    /// Returns `−lr·η·α·G̃`.
    pub fn step(&mut self, g: &Matrix, lr: f64) -> Result<Matrix> {
        let gt = self.scaled_gradient(g)?;
        let eta = self.limiter.limit(gt.frobenius());
        Ok(gt.scale(-lr * eta * self.cfg.alpha))
    }
}

/// `1/(√x + ε)`, mapping `0/0` to zero when `ε = 0`.
pub(crate) fn guarded_rsqrt(x: f64, eps: f64) -> f64 {
    let d = x.max(0.0).sqrt() + eps;
    if d > 0.0 {
        1.0 / d
    } else {
        0.0
    }
}
