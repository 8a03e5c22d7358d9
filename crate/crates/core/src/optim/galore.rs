use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::matlib::{sym_eig, Matrix};

use super::adam::{AdamConfig, AdamState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaloreConfig {
    pub rank: usize,
    pub alpha: f64,
    pub refresh_interval: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub bias_correction: bool,
}

impl Default for GaloreConfig {
    fn default() -> Self {
        Self {
            rank: 256,
            alpha: 0.3,
            refresh_interval: 200,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            bias_correction: true,
        }
    }
}

impl GaloreConfig {
    pub fn validate_for(&self, rows: usize) -> Result<()> {
        ensure!(self.rank >= 1, Config, "galore rank must be at least 1");
        ensure!(
            self.rank <= rows,
            Config,
            "galore rank {} exceeds the smaller dimension {rows}",
            self.rank
        );
        ensure!(
            self.refresh_interval >= 1,
            Config,
            "galore refresh_interval must be at least 1"
        );
        self.inner().validate()
    }

    fn inner(&self) -> AdamConfig {
        AdamConfig {
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            bias_correction: self.bias_correction,
        }
    }
}

/// Adam on the projection onto the top-`r` left singular vectors of the
/// current gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaloreState {
    pub u: Option<Matrix>,
    pub inner: AdamState,
    pub step: u64,
    pub cfg: GaloreConfig,
}

impl GaloreState {
    pub fn new(rows: usize, cols: usize, cfg: GaloreConfig) -> Result<Self> {
        cfg.validate_for(rows)?;
        Ok(Self {
            u: None,
            inner: AdamState::new(cfg.rank, cols, cfg.inner()),
            step: 0,
            cfg,
        })
    }

    pub fn step(&mut self, g: &Matrix, lr: f64) -> Result<Matrix> {
        ensure!(
            g.cols() == self.inner.m.cols(),
            Dimension,
            "galore state has {} columns",
            self.inner.m.cols()
        );
        ensure!(
            self.cfg.rank <= g.rows(),
            Dimension,
            "galore rank {} exceeds {} rows",
            self.cfg.rank,
            g.rows()
        );
        self.step += 1;
        let t = self.step;
        if t == 1 || t % self.cfg.refresh_interval == 0 {
            // Left singular vectors of G are the eigenvectors of GGᵀ.
            self.u = Some(sym_eig(&g.gram_rows(), Some(self.cfg.rank))?.vectors);
        }
        let u = self.u.as_ref().expect("basis set on the first step");
        let sigma = u.t_matmul(g)?;
        let d = self.inner.step(&sigma, self.cfg.alpha * lr)?;
        u.matmul(&d)
    }
}
