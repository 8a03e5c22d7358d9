use serde::{Deserialize, Serialize};

/// Default growth threshold.
pub const DEFAULT_GAMMA: f64 = 1.01;

/// Caps the growth of successive update norms at a factor `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormGrowthLimiter {
    /// Norm of the previous limited update; zero before the first call.
    pub phi: f64,
    pub gamma: f64,
}

impl NormGrowthLimiter {
    pub fn new(gamma: f64) -> Self {
        Self { phi: 0.0, gamma }
    }

    /// Returns the factor `η` for an update of norm `norm` and records
    /// `φ ← η·norm`. `η = 1` while no previous norm exists.
    pub fn limit(&mut self, norm: f64) -> f64 {
        let eta = if self.phi > 0.0 {
            self.gamma / (norm / self.phi).max(self.gamma)
        } else {
            1.0
        };
        self.phi = eta * norm;
        eta
    }
}
