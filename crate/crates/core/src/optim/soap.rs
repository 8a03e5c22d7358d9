use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::matlib::{sym_eig, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoapConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub refresh_interval: u64,
    pub eps: f64,
    /// Pin the right eigenbasis to the identity, leaving a one-sided method.
    pub identity_right: bool,
}

impl Default for SoapConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            beta3: 0.999,
            refresh_interval: 10,
            eps: 1e-8,
            identity_right: false,
        }
    }
}

impl SoapConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, b) in [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("beta3", self.beta3),
        ] {
            ensure!(
                (0.0..1.0).contains(&b),
                Config,
                "soap {name} must be in [0, 1)"
            );
        }
        ensure!(
            self.refresh_interval >= 1,
            Config,
            "soap refresh_interval must be at least 1"
        );
        ensure!(self.eps >= 0.0, Config, "soap eps must be non-negative");
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoapState {
    pub l: Matrix,
    pub r: Matrix,
    pub ul: Matrix,
    pub ur: Matrix,
    pub m: Matrix,
    pub v: Matrix,
    pub step: u64,
    pub cfg: SoapConfig,
}

impl SoapState {
    pub fn new(rows: usize, cols: usize, cfg: SoapConfig) -> Self {
        Self {
            l: Matrix::zeros(rows, rows),
            r: Matrix::zeros(cols, cols),
            ul: Matrix::identity(rows),
            ur: Matrix::identity(cols),
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
            "soap state is {:?}, gradient {:?}",
            self.m.shape(),
            g.shape()
        );
        self.step += 1;
        let t = self.step;
        let c = self.cfg.clone();
        self.m.axpby(c.beta1, 1.0 - c.beta1, g)?;
        self.l.axpby(c.beta3, 1.0 - c.beta3, &g.gram_rows())?;
        if !c.identity_right {
            self.r.axpby(c.beta3, 1.0 - c.beta3, &g.gram_cols())?;
        }
        if t == 1 || t % c.refresh_interval == 0 {
            self.ul = sym_eig(&self.l, None)?.vectors;
            if !c.identity_right {
                self.ur = sym_eig(&self.r, None)?.vectors;
            }
        }
        let rotate = |x: &Matrix| -> Result<Matrix> { self.ul.t_matmul(&x.matmul(&self.ur)?) };
        let mt = rotate(&self.m)?;
        let gt = rotate(g)?;
        self.v.axpby(c.beta2, 1.0 - c.beta2, &gt.square())?;
        let ratio = mt.zip_map(&self.v, |a, b| a / (b.sqrt() + c.eps));
        Ok(self.ul.matmul(&ratio.matmul_t(&self.ur)?)?.scale(-lr))
    }
}
