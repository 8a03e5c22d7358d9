use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Linear warmup to `base_lr`, then cosine decay to `final_frac·base_lr`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub base_lr: f64,
    pub warmup_frac: f64,
    pub final_frac: f64,
    pub total_steps: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            base_lr: 1e-3,
            warmup_frac: 0.1,
            final_frac: 0.1,
            total_steps: 1000,
        }
    }
}

impl Schedule {
    pub fn constant(lr: f64, total_steps: u64) -> Self {
        Self {
            base_lr: lr,
            warmup_frac: 0.0,
            final_frac: 1.0,
            total_steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.base_lr.is_finite() && self.base_lr >= 0.0,
            Config,
            "base_lr must be finite and non-negative"
        );
        ensure!(
            (0.0..1.0).contains(&self.warmup_frac),
            Config,
            "warmup_frac must be in [0, 1)"
        );
        ensure!(
            self.final_frac > 0.0 && self.final_frac <= 1.0,
            Config,
            "final_frac must be in (0, 1]"
        );
        ensure!(
            self.total_steps >= 1,
            Config,
            "total_steps must be at least 1"
        );
        Ok(())
    }

    pub fn lr_at(&self, step: u64) -> Result<f64> {
        self.validate()?;
        ensure!(
            step <= self.total_steps,
            Config,
            "step {step} beyond schedule length {}",
            self.total_steps
        );
        let total = self.total_steps as f64;
        let warm = self.warmup_frac * total;
        let t = step as f64;
        if t < warm {
            return Ok(self.base_lr * t / warm);
        }
        let span = total - warm;
        let progress = if span > 0.0 { (t - warm) / span } else { 1.0 };
        let cosine = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        Ok(self.base_lr * (self.final_frac + (1.0 - self.final_frac) * cosine))
    }
}
