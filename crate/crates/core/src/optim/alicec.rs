use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::matlib::{sym_eig, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AliceCConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    /// Eigenbasis refresh interval.
    pub refresh_interval: u64,
    pub eps: f64,
    /// Pin the eigenbasis to the identity (debugging / reduction checks).
    pub identity_basis: bool,
}

impl Default for AliceCConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            beta3: 0.999,
            refresh_interval: 10,
            eps: 1e-8,
            identity_basis: false,
        }
    }
}

impl AliceCConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, b) in [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("beta3", self.beta3),
        ] {
            ensure!(
                (0.0..1.0).contains(&b),
                Config,
                "alice_c {name} must be in [0, 1)"
            );
        }
        ensure!(
            self.refresh_interval >= 1,
            Config,
            "alice_c refresh_interval must be at least 1"
        );
        ensure!(self.eps >= 0.0, Config, "alice_c eps must be non-negative");
        Ok(())
    }
}

/// Adam in the eigenbasis of the left gradient covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AliceCState {
    pub q: Matrix,
    pub uf: Matrix,
    pub m: Matrix,
    pub v: Matrix,
    pub step: u64,
    pub cfg: AliceCConfig,
}

impl AliceCState {
    pub fn new(rows: usize, cols: usize, cfg: AliceCConfig) -> Self {
        Self {
            q: Matrix::zeros(rows, rows),
            uf: Matrix::identity(rows),
            m: Matrix::zeros(rows, cols),
            v: Matrix::zeros(rows, cols),
            step: 0,
            cfg,
        }
    }

    pub fn step(&mut self, g: &Matrix, lr: f64) -> Result<Matrix> {
        ensure!(
            g.shape() == self.m.shape(),
            Dimension,
            "alice_c state is {:?}, gradient {:?}",
            self.m.shape(),
            g.shape()
        );
        self.step += 1;
        let t = self.step;
        let c = self.cfg.clone();
        self.q.axpby(c.beta3, 1.0 - c.beta3, &g.gram_rows())?;
        self.m.axpby(c.beta1, 1.0 - c.beta1, g)?;
        if !c.identity_basis && (t == 1 || t % c.refresh_interval == 0) {
            self.uf = sym_eig(&self.q, None)?.vectors;
        }
        let mt = self.uf.t_matmul(&self.m)?;
        let gt = self.uf.t_matmul(g)?;
        self.v.axpby(c.beta2, 1.0 - c.beta2, &gt.square())?;
        let ratio = mt.zip_map(&self.v, |a, b| a / (b.sqrt() + c.eps));
        Ok(self.uf.matmul(&ratio)?.scale(-lr))
    }
}
