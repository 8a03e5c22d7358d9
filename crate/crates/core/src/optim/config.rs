use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::adam::AdamConfig;
use super::alice::AliceConfig;
use super::alicec::AliceCConfig;
use super::galore::GaloreConfig;
use super::memory::OptimizerKind;
use super::racs::RacsConfig;
use super::shampoo::ShampooConfig;
use super::soap::SoapConfig;

/// Optimizer selection plus hyperparameters, tagged by `kind`.
///
/// ```
/// use fimopt::optim::OptimizerConfig;
/// let cfg: OptimizerConfig = serde_json::from_str(r#"{"kind": "racs", "alpha": 0.1}"#).unwrap();
/// assert_eq!(cfg.kind().name(), "racs");
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerConfig {
    Sgd,
    Adam(AdamConfig),
    Racs(RacsConfig),
    Alice(AliceConfig),
    /// Alice without the projected covariance state; `tracking` is ignored.
    Alice0(AliceConfig),
    AliceC(AliceCConfig),
    Soap(SoapConfig),
    Shampoo(ShampooConfig),
    Galore(GaloreConfig),
}

impl OptimizerConfig {
    pub fn kind(&self) -> OptimizerKind {
        match self {
            Self::Sgd => OptimizerKind::Sgd,
            Self::Adam(_) => OptimizerKind::Adam,
            Self::Racs(_) => OptimizerKind::Racs,
            Self::Alice(_) => OptimizerKind::Alice,
            Self::Alice0(_) => OptimizerKind::Alice0,
            Self::AliceC(_) => OptimizerKind::AliceC,
            Self::Soap(_) => OptimizerKind::Soap,
            Self::Shampoo(_) => OptimizerKind::Shampoo,
            Self::Galore(_) => OptimizerKind::Galore,
        }
    }

    /// Default settings for `kind`. Low-rank methods get `rank`, clipped later
    /// against the parameter shape.
    pub fn default_for(kind: OptimizerKind) -> Self {
        match kind {
            OptimizerKind::Sgd => Self::Sgd,
            OptimizerKind::Adam => Self::Adam(AdamConfig::default()),
            OptimizerKind::Racs => Self::Racs(RacsConfig::default()),
            OptimizerKind::Alice => Self::Alice(AliceConfig::default()),
            OptimizerKind::Alice0 => Self::Alice0(AliceConfig {
                tracking: false,
                ..AliceConfig::default()
            }),
            OptimizerKind::AliceC => Self::AliceC(AliceCConfig::default()),
            OptimizerKind::Soap => Self::Soap(SoapConfig::default()),
            OptimizerKind::Shampoo => Self::Shampoo(ShampooConfig::default()),
            OptimizerKind::Galore => Self::Galore(GaloreConfig::default()),
        }
    }

    pub fn rank(&self) -> Option<usize> {
        match self {
            Self::Alice(c) | Self::Alice0(c) => Some(c.rank),
            Self::Galore(c) => Some(c.rank),
            _ => None,
        }
    }

    /// Shape-independent checks.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Sgd => Ok(()),
            Self::Adam(c) => c.validate(),
            Self::Racs(c) => c.validate(),
            Self::Alice(c) | Self::Alice0(c) => c.validate(),
            Self::AliceC(c) => c.validate(),
            Self::Soap(c) => c.validate(),
            Self::Shampoo(c) => c.validate(),
            Self::Galore(c) => c.validate_for(usize::MAX),
        }
    }
}
