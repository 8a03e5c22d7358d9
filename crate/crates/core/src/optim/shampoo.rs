use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::matlib::{newton_schulz_inv_fourth_root, sym_pow, Matrix, NS_DEFAULT_STEPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootMethod {
    Eigen,
    NewtonSchulz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShampooConfig {
    /// Initial `ε·I` of both accumulators.
    pub eps: f64,
    /// Recompute the inverse fourth roots every this many steps.
    pub root_interval: u64,
    pub root_method: RootMethod,
    pub ns_steps: usize,
}

impl Default for ShampooConfig {
    fn default() -> Self {
        Self {
            eps: 1e-8,
            root_interval: 1,
            root_method: RootMethod::Eigen,
            ns_steps: NS_DEFAULT_STEPS,
        }
    }
}

impl ShampooConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.eps > 0.0, Config, "shampoo eps must be positive");
        ensure!(
            self.root_interval >= 1,
            Config,
            "shampoo root_interval must be at least 1"
        );
        ensure!(
            self.ns_steps >= 1,
            Config,
            "shampoo ns_steps must be at least 1"
        );
        Ok(())
    }
}

/// Full-matrix left/right accumulators with `−lr·L^(-1/4)·G·R^(-1/4)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShampooState {
    pub l: Matrix,
    pub r: Matrix,
    pub l_root: Matrix,
    pub r_root: Matrix,
    pub step: u64,
    pub cfg: ShampooConfig,
}

impl ShampooState {
    pub fn new(rows: usize, cols: usize, cfg: ShampooConfig) -> Self {
        Self {
            l: Matrix::identity(rows).scale(cfg.eps),
            r: Matrix::identity(cols).scale(cfg.eps),
            l_root: Matrix::identity(rows),
            r_root: Matrix::identity(cols),
            step: 0,
            cfg,
        }
    }

    fn root(&self, a: &Matrix) -> Result<Matrix> {
        match self.cfg.root_method {
            RootMethod::Eigen => sym_pow(a, -0.25),
            RootMethod::NewtonSchulz => newton_schulz_inv_fourth_root(a, self.cfg.ns_steps),
        }
    }

    pub fn step(&mut self, g: &Matrix, lr: f64) -> Result<Matrix> {
        ensure!(
            g.shape() == (self.l.rows(), self.r.rows()),
            Dimension,
            "shampoo state is {}x{}, gradient {:?}",
            self.l.rows(),
            self.r.rows(),
            g.shape()
        );
        self.step += 1;
        self.l.axpby(1.0, 1.0, &g.gram_rows())?;
        self.r.axpby(1.0, 1.0, &g.gram_cols())?;
        if self.step == 1 || self.step % self.cfg.root_interval == 0 {
            self.l_root = self.root(&self.l)?;
            self.r_root = self.root(&self.r)?;
        }
        Ok(self.l_root.matmul(&g.matmul(&self.r_root)?)?.scale(-lr))
    }
}
