use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::matlib::Matrix;

use super::compensation::compensate;
use super::limiter::{NormGrowthLimiter, DEFAULT_GAMMA};
use super::rng::refresh_rng;
use super::switching::{leading_basis, switch_basis, RefreshMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AliceConfig {
    pub rank: usize,
    /// Leading eigenvectors kept at each switch; the rest are resampled.
    pub leading: usize,
    pub alpha: f64,
    pub alpha_c: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub refresh_interval: u64,
    pub gamma: f64,
    pub eps: f64,
    /// Keep the projected covariance `Q̃` across refreshes. Off gives Alice-0.
    pub tracking: bool,
    pub switching: bool,
    pub compensation: bool,
    /// Re-express the first moment and `Q̃` in the new basis after a refresh.
    pub transport: bool,
    pub refresh: RefreshMode,
}

impl Default for AliceConfig {
    fn default() -> Self {
        Self {
            rank: 256,
            leading: 40,
            alpha: 0.3,
            alpha_c: 0.4,
            beta1: 0.9,
            beta2: 0.9,
            beta3: 0.999,
            refresh_interval: 200,
            gamma: DEFAULT_GAMMA,
            eps: 1e-8,
            tracking: true,
            switching: true,
            compensation: true,
            transport: true,
            refresh: RefreshMode::Switch,
        }
    }
}

impl AliceConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.rank >= 1, Config, "alice rank must be at least 1");
        ensure!(
            self.leading <= self.rank,
            Config,
            "alice leading ({}) exceeds rank ({})",
            self.leading,
            self.rank
        );
        for (name, b) in [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("beta3", self.beta3),
        ] {
            ensure!(
                (0.0..1.0).contains(&b),
                Config,
                "alice {name} must be in [0, 1)"
            );
        }
        ensure!(
            self.refresh_interval >= 1,
            Config,
            "alice refresh_interval must be at least 1"
        );
        ensure!(self.gamma > 1.0, Config, "alice gamma must exceed 1");
        ensure!(self.eps >= 0.0, Config, "alice eps must be non-negative");
        Ok(())
    }

    /// Rank check against the (oriented) row count.
    pub fn validate_for(&self, rows: usize) -> Result<()> {
        self.validate()?;
        ensure!(
            self.rank <= rows,
            Config,
            "alice rank {} exceeds the smaller dimension {rows}",
            self.rank
        );
        Ok(())
    }
}

/// Low-rank eigenbasis Adam with tracking, switching and compensation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AliceState {
    pub u: Option<Matrix>,
    pub qt: Matrix,
    pub m: Matrix,
    pub v: Matrix,
    pub p: Vec<f64>,
    pub limiter: NormGrowthLimiter,
    pub step: u64,
    pub refreshes: u64,
    pub seed: u64,
    pub layer: u64,
    pub cfg: AliceConfig,
}

impl AliceState {
    pub fn new(rows: usize, cols: usize, cfg: AliceConfig, seed: u64, layer: u64) -> Result<Self> {
        cfg.validate_for(rows)?;
        let r = cfg.rank;
        Ok(Self {
            u: None,
            qt: Matrix::zeros(r, r),
            m: Matrix::zeros(r, cols),
            v: Matrix::zeros(r, cols),
            p: vec![0.0; cols],
            limiter: NormGrowthLimiter::new(cfg.gamma),
            step: 0,
            refreshes: 0,
            seed,
            layer,
            cfg,
        })
    }

    fn beta3(&self) -> f64 {
        if self.cfg.tracking {
            self.cfg.beta3
        } else {
            0.0
        }
    }

    fn refresh(&mut self, g: &Matrix) -> Result<()> {
        let b3 = self.beta3();
        let mut q = g.gram_rows().scale(1.0 - b3);
        if let (Some(u), true) = (&self.u, b3 > 0.0) {
            q.axpby(1.0, b3, &u.matmul(&self.qt.matmul_t(u)?)?)?;
        }
        let warm = match self.cfg.refresh {
            RefreshMode::Switch => self.u.as_ref(),
            RefreshMode::ExactEig => None,
        };
        let est = leading_basis(&q, self.cfg.rank, warm)?;
        let new = if self.cfg.switching && self.cfg.refresh == RefreshMode::Switch {
            let mut rng = refresh_rng(self.seed, self.layer, self.refreshes);
            switch_basis(&est, self.cfg.leading, &mut rng)?
        } else {
            est
        };
        if let (Some(old), true) = (&self.u, self.cfg.transport) {
            let t = new.t_matmul(old)?;
            self.m = t.matmul(&self.m)?;
            self.qt = t.matmul(&self.qt.matmul_t(&t)?)?;
        }
        self.u = Some(new);
        self.refreshes += 1;
        Ok(())
    }

    pub fn step(&mut self, g: &Matrix, lr: f64) -> Result<Matrix> {
        ensure!(
            g.cols() == self.m.cols(),
            Dimension,
            "alice state has {} columns, gradient {:?}",
            self.m.cols(),
            g.shape()
        );
        ensure!(
            self.cfg.rank <= g.rows(),
            Dimension,
            "alice rank {} exceeds {} rows",
            self.cfg.rank,
            g.rows()
        );
        ensure!(g.is_finite(), Numeric, "non-finite gradient");
        self.step += 1;
        let t = self.step;
        if t == 1 || t % self.cfg.refresh_interval == 0 {
            self.refresh(g)?;
        }
        let u = self.u.clone().expect("basis set on the first step");
        let c = self.cfg.clone();
        let sigma = u.t_matmul(g)?;
        let b3 = self.beta3();
        if b3 > 0.0 {
            self.qt.axpby(b3, 1.0 - b3, &sigma.gram_rows())?;
        }
        self.m.axpby(c.beta1, 1.0 - c.beta1, &sigma)?;
        self.v.axpby(c.beta2, 1.0 - c.beta2, &sigma.square())?;
        let omega = self.m.zip_map(&self.v, |a, b| a / (b.sqrt() + c.eps));
        let mut delta = u.matmul(&omega)?;
        if c.compensation && c.rank < g.rows() && c.alpha_c != 0.0 {
            let comp = compensate(g, &u, &mut self.p, &mut self.limiter, c.beta1)?;
            delta.axpby(1.0, c.alpha_c, &comp)?;
        }
        Ok(delta.scale(-lr * c.alpha))
    }
}
