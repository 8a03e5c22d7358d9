use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::matlib::Matrix;

use super::adam::AdamState;
use super::alice::{AliceConfig, AliceState};
use super::alicec::AliceCState;
use super::config::OptimizerConfig;
use super::galore::GaloreState;
use super::memory::{memory_estimate, OptimizerKind};
use super::racs::RacsState;
use super::shampoo::ShampooState;
use super::soap::SoapState;

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerState {
    Sgd,
    Adam(AdamState),
    Racs(RacsState),
    Alice(AliceState),
    Alice0(AliceState),
    AliceC(AliceCState),
    Soap(SoapState),
    Shampoo(ShampooState),
    Galore(GaloreState),
}

/// One optimizer instance bound to one `rows×cols` parameter.
///
/// Methods that eigendecompose only the left side work on the transposed
/// gradient when `rows > cols`, so the decomposed side is the smaller one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamOptimizer {
    rows: usize,
    cols: usize,
    transposed: bool,
    state: OptimizerState,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    optimizer: ParamOptimizer,
}

impl ParamOptimizer {
    /// `seed` and `layer` drive the randomized subspace switching.
    pub fn new(
        config: &OptimizerConfig,
        rows: usize,
        cols: usize,
        seed: u64,
        layer: u64,
    ) -> Result<Self> {
        ensure!(
            rows >= 1 && cols >= 1,
            Dimension,
            "parameter shape must be non-empty"
        );
        config.validate()?;
        let transposed = rows > cols
            && matches!(
                config.kind(),
                OptimizerKind::Alice
                    | OptimizerKind::Alice0
                    | OptimizerKind::AliceC
                    | OptimizerKind::Galore
            );
        let (m, n) = if transposed {
            (cols, rows)
        } else {
            (rows, cols)
        };
        let state = match config {
            OptimizerConfig::Sgd => OptimizerState::Sgd,
            OptimizerConfig::Adam(c) => OptimizerState::Adam(AdamState::new(m, n, c.clone())),
            OptimizerConfig::Racs(c) => OptimizerState::Racs(RacsState::new(m, n, c.clone())),
            OptimizerConfig::Alice(c) => {
                OptimizerState::Alice(AliceState::new(m, n, c.clone(), seed, layer)?)
            }
            OptimizerConfig::Alice0(c) => {
                let c = AliceConfig {
                    tracking: false,
                    ..c.clone()
                };
                OptimizerState::Alice0(AliceState::new(m, n, c, seed, layer)?)
            }
            OptimizerConfig::AliceC(c) => OptimizerState::AliceC(AliceCState::new(m, n, c.clone())),
            OptimizerConfig::Soap(c) => OptimizerState::Soap(SoapState::new(m, n, c.clone())),
            OptimizerConfig::Shampoo(c) => {
                OptimizerState::Shampoo(ShampooState::new(m, n, c.clone()))
            }
            OptimizerConfig::Galore(c) => {
                OptimizerState::Galore(GaloreState::new(m, n, c.clone())?)
            }
        };
        Ok(Self {
            rows,
            cols,
            transposed,
            state,
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        match &self.state {
            OptimizerState::Sgd => OptimizerKind::Sgd,
            OptimizerState::Adam(_) => OptimizerKind::Adam,
            OptimizerState::Racs(_) => OptimizerKind::Racs,
            OptimizerState::Alice(_) => OptimizerKind::Alice,
            OptimizerState::Alice0(_) => OptimizerKind::Alice0,
            OptimizerState::AliceC(_) => OptimizerKind::AliceC,
            OptimizerState::Soap(_) => OptimizerKind::Soap,
            OptimizerState::Shampoo(_) => OptimizerKind::Shampoo,
            OptimizerState::Galore(_) => OptimizerKind::Galore,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_transposed(&self) -> bool {
        self.transposed
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    /// Returns the update `ΔW`, to be added to the parameter.
    pub fn step(&mut self, grad: &Matrix, lr: f64) -> Result<Matrix> {
        ensure!(
            grad.shape() == (self.rows, self.cols),
            Dimension,
            "optimizer bound to {}x{}, got gradient {:?}",
            self.rows,
            self.cols,
            grad.shape()
        );
        ensure!(grad.is_finite(), Numeric, "non-finite gradient");
        ensure!(lr.is_finite(), Config, "non-finite learning rate");
        let owned;
        let g = if self.transposed {
            owned = grad.transpose();
            &owned
        } else {
            grad
        };
        let d = match &mut self.state {
            OptimizerState::Sgd => g.scale(-lr),
            OptimizerState::Adam(s) => s.step(g, lr)?,
            OptimizerState::Racs(s) => s.step(g, lr)?,
            OptimizerState::Alice(s) | OptimizerState::Alice0(s) => s.step(g, lr)?,
            OptimizerState::AliceC(s) => s.step(g, lr)?,
            OptimizerState::Soap(s) => s.step(g, lr)?,
            OptimizerState::Shampoo(s) => s.step(g, lr)?,
            OptimizerState::Galore(s) => s.step(g, lr)?,
        };
        Ok(if self.transposed { d.transpose() } else { d })
    }

    /// Stored floats including the parameter itself.
    pub fn memory_floats(&self) -> u64 {
        let (m, n) = if self.transposed {
            (self.cols, self.rows)
        } else {
            (self.rows, self.cols)
        };
        let r = match &self.state {
            OptimizerState::Alice(s) | OptimizerState::Alice0(s) => Some(s.cfg.rank as u64),
            OptimizerState::Galore(s) => Some(s.cfg.rank as u64),
            _ => None,
        };
        memory_estimate(self.kind(), m as u64, n as u64, r)
            .expect("shape validated at construction")
    }

    /// Versioned JSON snapshot of the full state.
    pub fn snapshot(&self) -> Result<String> {
        serde_json::to_string(&Snapshot {
            version: SNAPSHOT_VERSION,
            optimizer: self.clone(),
        })
        .map_err(|e| Error::Numeric(format!("state not serializable: {e}")))
    }

    pub fn restore(json: &str) -> Result<Self> {
        let snap: Snapshot =
            serde_json::from_str(json).map_err(|e| Error::Config(format!("bad snapshot: {e}")))?;
        ensure!(
            snap.version == SNAPSHOT_VERSION,
            Config,
            "snapshot version {} unsupported",
            snap.version
        );
        Ok(snap.optimizer)
    }
}
