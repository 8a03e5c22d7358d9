//! Stored floats per `m×n` parameter (weights included).

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
    Racs,
    Alice,
    Alice0,
    AliceC,
    Soap,
    Shampoo,
    Galore,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 9] = [
        Self::Sgd,
        Self::Adam,
        Self::Shampoo,
        Self::AliceC,
        Self::Soap,
        Self::Galore,
        Self::Racs,
        Self::Alice,
        Self::Alice0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sgd => "sgd",
            Self::Adam => "adam",
            Self::Racs => "racs",
            Self::Alice => "alice",
            Self::Alice0 => "alice0",
            Self::AliceC => "alice_c",
            Self::Soap => "soap",
            Self::Shampoo => "shampoo",
            Self::Galore => "galore",
        }
    }

    pub fn needs_rank(self) -> bool {
        matches!(self, Self::Alice | Self::Alice0 | Self::Galore)
    }
}

/// Memory footprint in floats.
///
/// | kind     | formula                    |
/// |----------|----------------------------|
/// | sgd      | mn                         |
/// | adam     | 3mn                        |
/// | shampoo  | mn + m² + n²               |
/// | alice_c  | 3mn + 2m²                  |
/// | soap     | 3mn + 2m² + 2n²            |
/// | galore   | mn + 2nr + mr              |
/// | racs     | mn + m + n + 1             |
/// | alice    | mn + 2nr + mr + n + r²     |
/// | alice0   | mn + 2nr + mr + n          |
pub fn memory_estimate(kind: OptimizerKind, m: u64, n: u64, r: Option<u64>) -> Result<u64> {
    ensure!(m >= 1 && n >= 1, Config, "dimensions must be positive");
    let mn = m * n;
    let rank = || -> Result<u64> {
        match r {
            Some(r) if r >= 1 => Ok(r),
            Some(_) => Err(crate::Error::Config("rank must be positive".into())),
            None => Err(crate::Error::Config(format!(
                "{} requires a rank r",
                kind.name()
            ))),
        }
    };
    Ok(match kind {
        OptimizerKind::Sgd => mn,
        OptimizerKind::Adam => 3 * mn,
        OptimizerKind::Shampoo => mn + m * m + n * n,
        OptimizerKind::AliceC => 3 * mn + 2 * m * m,
        OptimizerKind::Soap => 3 * mn + 2 * m * m + 2 * n * n,
        OptimizerKind::Galore => {
            let r = rank()?;
            mn + 2 * n * r + m * r
        }
        OptimizerKind::Racs => mn + m + n + 1,
        OptimizerKind::Alice => {
            let r = rank()?;
            mn + 2 * n * r + m * r + n + r * r
        }
        OptimizerKind::Alice0 => {
            let r = rank()?;
            mn + 2 * n * r + m * r + n
        }
    })
}
